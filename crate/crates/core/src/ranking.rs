//! Shapley attribution of group FeAR, rank vectors, and Kendall's tau-b.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fear::{FearConfig, GroupFearGame};
use crate::grid::{AgentId, AgentSet, GridState, JointAction, MdrProfile, ACTION_COUNT};
use crate::influence::TierStructure;

/// Exact enumeration is capped so the subset table stays in memory.
pub const MAX_SHAPLEY_PLAYERS: usize = 24;
pub const EFFICIENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub affected: AgentId,
    /// `φ_i` for every other agent, in id order.
    pub values: Vec<(AgentId, f64)>,
    /// Raw group FeAR of all other agents together.
    pub grand_value: f64,
}

impl ShapleyResult {
    pub fn value(&self, actor: AgentId) -> Option<f64> {
        self.values.iter().find(|(i, _)| *i == actor).map(|&(_, v)| v)
    }
}

/// Exact Shapley values of the characteristic function `v(G) = raw FeAR_{G,j}`
/// over the players `¬j`.
pub fn shapley_with(game: &GroupFearGame) -> Result<ShapleyResult> {
    let players = game.others().to_vec();
    let m = players.len();
    if m > MAX_SHAPLEY_PLAYERS {
        return Err(Error::InvalidConfig(format!(
            "exact Shapley enumeration supports at most {MAX_SHAPLEY_PLAYERS} players, got {m}"
        )));
    }
    let subsets = 1usize << m;
    let coalition = |mask: usize| -> AgentSet {
        (0..m).filter(|b| mask & (1 << b) != 0).map(|b| players[b]).collect()
    };
    // v(S) depends on S only through the counterfactual count, so each φ_i is
    // accumulated as exact integer weights per count level and converted once.
    let counts: Vec<usize> = (0..subsets).map(|mask| game.count(coalition(mask)) as usize).collect();
    let levels: Vec<f64> = (0..=ACTION_COUNT as u32).map(|c| game.raw_for_count(c)).collect();

    // s!(m-s-1)! over a common denominator m!.
    let factorial = |n: usize| -> i128 { (1..=n as i128).product() };
    let numer: Vec<i128> = (0..m).map(|s| factorial(s) * factorial(m - s - 1)).collect();
    let denom = factorial(m) as f64;

    let mut values = Vec::with_capacity(m);
    for (b, &player) in players.iter().enumerate() {
        let bit = 1usize << b;
        let mut coef = [0i128; ACTION_COUNT + 1];
        for mask in (0..subsets).filter(|mask| mask & bit == 0) {
            let w = numer[mask.count_ones() as usize];
            coef[counts[mask | bit]] += w;
            coef[counts[mask]] -= w;
        }
        let terms = coef.iter().zip(&levels).filter(|(c, _)| **c != 0).map(|(&c, &f)| c as f64 / denom * f);
        values.push((player, compensated_sum(terms)));
    }
    let grand_value = if m == 0 { 0.0 } else { game.raw_for_count(counts[subsets - 1] as u32) };
    let sum = compensated_sum(values.iter().map(|&(_, p)| p));
    // Beyond magnitude 1 the bound scales with the ulp of the largest term.
    let scale = levels.iter().map(|f| f.abs()).fold(1.0, f64::max);
    if (sum - grand_value).abs() > EFFICIENCY_TOLERANCE * scale {
        return Err(Error::EfficiencyViolation { sum, grand: grand_value });
    }
    Ok(ShapleyResult { affected: game.affected(), values, grand_value })
}

/// Neumaier summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        comp += if f64::abs(sum) >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

pub fn shapley_values(
    state: &GridState,
    joint: &JointAction,
    mdr: &MdrProfile,
    affected: AgentId,
    cfg: &FearConfig,
) -> Result<ShapleyResult> {
    cfg.validate()?;
    shapley_with(&GroupFearGame::new(state, joint, mdr, affected, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RankSource {
    #[serde(rename = "iFeAR")]
    IFear,
    Tier,
    Shapley,
}

impl fmt::Display for RankSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankSource::IFear => "iFeAR",
            RankSource::Tier => "Tier",
            RankSource::Shapley => "Shapley",
        })
    }
}

/// What a rank vector is built from.
#[derive(Debug, Clone, Copy)]
pub enum RankInput<'a> {
    /// Raw individual FeAR of each actor on `affected`.
    IFear { affected: AgentId, column: &'a [(AgentId, f64)] },
    Tier(&'a TierStructure),
    Shapley(&'a ShapleyResult),
}

impl RankInput<'_> {
    fn source(&self) -> RankSource {
        match self {
            RankInput::IFear { .. } => RankSource::IFear,
            RankInput::Tier(_) => RankSource::Tier,
            RankInput::Shapley(_) => RankSource::Shapley,
        }
    }

    fn affected(&self) -> AgentId {
        match self {
            RankInput::IFear { affected, .. } => *affected,
            RankInput::Tier(ts) => ts.affected,
            RankInput::Shapley(s) => s.affected,
        }
    }
}

/// Competition ranks ("1, 1, 3") of every actor on one affected agent.
/// Non-assertive actors all hold `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector {
    pub affected: AgentId,
    pub source: RankSource,
    /// Every actor other than the affected agent, in id order.
    pub ranks: Vec<(AgentId, u32)>,
    pub nonassertive_rank: u32,
}

impl RankVector {
    pub fn rank(&self, actor: AgentId) -> Option<u32> {
        self.ranks.iter().find(|(i, _)| *i == actor).map(|&(_, r)| r)
    }

    pub fn assertive(&self) -> AgentSet {
        self.ranks
            .iter()
            .filter(|&&(_, r)| r != self.nonassertive_rank)
            .map(|&(i, _)| i)
            .collect()
    }
}

/// Competition ranking of positive scores, descending; scores within the
/// tolerance of a block's leader share its rank.
fn rank_scores(scores: &[(AgentId, f64)], cfg: &FearConfig) -> Vec<(AgentId, u32)> {
    let mut positive: Vec<(AgentId, f64)> = scores.iter().copied().filter(|&(_, s)| cfg.is_positive(s)).collect();
    positive.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(positive.len());
    let mut leader = f64::INFINITY;
    let mut rank = 0u32;
    for (pos, &(id, score)) in positive.iter().enumerate() {
        if score < leader - cfg.compare_tolerance {
            leader = score;
            rank = pos as u32 + 1;
        }
        out.push((id, rank));
    }
    out
}

pub fn make_ranks(input: RankInput<'_>, mode: RankSource, k: usize, cfg: &FearConfig) -> Result<RankVector> {
    if input.source() != mode {
        return Err(Error::Inconsistent(format!("{} data supplied for {mode} ranks", input.source())));
    }
    let affected = input.affected();
    if affected.0 == 0 || affected.0 > k {
        return Err(Error::UnknownAgent(affected));
    }
    let nonassertive_rank = k as u32 + 1;
    let assigned: Vec<(AgentId, u32)> = match input {
        RankInput::IFear { column, .. } => rank_scores(column, cfg),
        RankInput::Shapley(s) => rank_scores(&s.values, cfg),
        RankInput::Tier(ts) => {
            let mut out = Vec::new();
            let mut better = 0u32;
            for tier in &ts.tiers {
                let members: AgentSet = tier.iter().fold(AgentSet::EMPTY, |acc, g| acc.union(*g));
                out.extend(members.iter().map(|i| (i, better + 1)));
                better += members.len() as u32;
            }
            out
        }
    };
    for &(i, _) in &assigned {
        if i.0 == 0 || i.0 > k || i == affected {
            return Err(Error::Inconsistent(format!("actor {i} is not ranked on affected agent {affected}")));
        }
    }
    let ranks = (1..=k)
        .map(AgentId)
        .filter(|&i| i != affected)
        .map(|i| {
            let r = assigned.iter().find(|(a, _)| *a == i).map_or(nonassertive_rank, |&(_, r)| r);
            (i, r)
        })
        .collect();
    Ok(RankVector { affected, source: mode, ranks, nonassertive_rank })
}

/// Kendall's tau-b. `None` when either vector is completely tied.
pub fn kendall_tau(r1: &RankVector, r2: &RankVector) -> Result<Option<f64>> {
    let ids1: Vec<AgentId> = r1.ranks.iter().map(|&(i, _)| i).collect();
    let ids2: Vec<AgentId> = r2.ranks.iter().map(|&(i, _)| i).collect();
    if ids1 != ids2 {
        return Err(Error::Inconsistent("rank vectors cover different actors".into()));
    }
    let x: Vec<u32> = r1.ranks.iter().map(|&(_, r)| r).collect();
    let y: Vec<u32> = r2.ranks.iter().map(|&(_, r)| r).collect();
    Ok(tau_b(&x, &y))
}

pub(crate) fn tau_b(x: &[u32], y: &[u32]) -> Option<f64> {
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = x[a].cmp(&x[b]) as i64;
            let dy = y[a].cmp(&y[b]) as i64;
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => tied_x += 1,
                (_, 0) => tied_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let denom = (((concordant + discordant + tied_x) * (concordant + discordant + tied_y)) as f64).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((concordant - discordant) as f64 / denom)
    }
}
