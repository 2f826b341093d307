//! Tiering of assertive influences and their classification into solo,
//! mediated, coupled and mediated-coupled influence.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fear::{FearConfig, FearMatrix, GroupFearGame};
use crate::grid::{AgentId, AgentSet, GridState, JointAction, MdrProfile};

/// Ordered tiers of minimal assertive groups acting on one affected agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierStructure {
    pub affected: AgentId,
    /// Agents whose individual FeAR on the affected agent is negative.
    pub courteous: AgentSet,
    pub tiers: Vec<Vec<AgentSet>>,
    /// `cumulative[n]` is the union of tiers `1..=n+1`.
    pub cumulative: Vec<AgentSet>,
    /// Raw group FeAR of each cumulative set.
    pub fear_at_tier: Vec<f64>,
}

impl TierStructure {
    /// Every agent placed in some tier.
    pub fn assertive(&self) -> AgentSet {
        self.cumulative.last().copied().unwrap_or_default()
    }

    /// `R_{n-1}` for one-based tier `n`.
    pub fn mediators_of(&self, tier: usize) -> AgentSet {
        if tier <= 1 {
            AgentSet::EMPTY
        } else {
            self.cumulative[tier - 2]
        }
    }
}

/// Lexicographic `k`-subsets of `pool` (already sorted).
pub(crate) fn combinations(pool: &[AgentId], k: usize) -> impl Iterator<Item = AgentSet> + '_ {
    let n = pool.len();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut done = k > n || k == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out: AgentSet = idx.iter().map(|&i| pool[i]).collect();
        // advance
        let mut pos = k;
        loop {
            if pos == 0 {
                done = true;
                break;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for q in pos + 1..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// Tiering over a prepared group-FeAR game.
///
/// Within a tier, groups of size 1, 2, ... are tried in lexicographic order
/// over the unclaimed candidates, and a group is admitted when it raises the
/// group FeAR of the previous cumulative set by more than the tolerance.
/// Admitted agents leave the candidate pool immediately. An empty tier ends
/// the search.
pub fn tiering_with(game: &GroupFearGame) -> TierStructure {
    let cfg = game.config();
    let others = game.others();
    let courteous: AgentSet = others
        .iter()
        .filter(|&i| cfg.is_negative(game.raw(AgentSet::singleton(i))))
        .collect();
    let mut remaining = others.difference(courteous);
    let mut reached = AgentSet::EMPTY;
    let mut reached_fear = 0.0;
    let mut ts = TierStructure {
        affected: game.affected(),
        courteous,
        tiers: Vec::new(),
        cumulative: Vec::new(),
        fear_at_tier: Vec::new(),
    };
    loop {
        let mut tier = Vec::new();
        let mut claimed = AgentSet::EMPTY;
        let mut k = 1;
        while k <= remaining.len() {
            let pool = remaining.to_vec();
            for group in combinations(&pool, k) {
                if group.intersects(claimed) {
                    continue;
                }
                if cfg.exceeds(game.raw(reached.union(group)), reached_fear) {
                    tier.push(group);
                    claimed = claimed.union(group);
                    remaining = remaining.difference(group);
                }
            }
            k += 1;
        }
        if tier.is_empty() {
            break;
        }
        reached = reached.union(claimed);
        reached_fear = game.raw(reached);
        ts.tiers.push(tier);
        ts.cumulative.push(reached);
        ts.fear_at_tier.push(reached_fear);
    }
    ts
}

pub fn tiering(
    state: &GridState,
    joint: &JointAction,
    mdr: &MdrProfile,
    affected: AgentId,
    cfg: &FearConfig,
) -> Result<TierStructure> {
    cfg.validate()?;
    Ok(tiering_with(&GroupFearGame::new(state, joint, mdr, affected, cfg)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InfluenceKind {
    Solo,
    Mediated,
    Coupled,
    MediatedCoupled,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfluenceRecord {
    pub kind: InfluenceKind,
    pub actors: AgentSet,
    /// `R_{n-1}` for influences found in tier `n > 1`.
    pub mediators: AgentSet,
    pub affected: AgentId,
}

impl fmt::Display for InfluenceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let actors = if self.actors.len() == 1 {
            self.actors.iter().next().map(|a| a.to_string()).unwrap_or_default()
        } else {
            self.actors.to_string()
        };
        write!(f, "{:?} {}→{}", self.kind, actors, self.affected)?;
        if !self.mediators.is_empty() {
            write!(f, " via {}", self.mediators)?;
        }
        Ok(())
    }
}

/// One record per tier group: singletons in tier 1 are solo, larger tier-1
/// groups are coupled, and later tiers are mediated by the cumulative set of
/// the tiers before them.
///
/// Mediated-coupled groups are read off the tiers as they stand. No
/// per-member equality test against the group's FeAR is applied; the tier
/// admission test (a strict gain over the mediators) is the condition used.
pub fn classify_influences(ts: &TierStructure, matrix: &FearMatrix, cfg: &FearConfig) -> Result<Vec<InfluenceRecord>> {
    let j = ts.affected;
    let column = matrix.column(j)?;
    let universe = AgentSet::all(matrix.agent_count());
    for group in ts.tiers.iter().flatten() {
        if !group.is_subset(universe) || group.contains(j) || group.is_empty() {
            return Err(Error::Inconsistent(format!("tier group {group} is not a valid actor group for agent {j}")));
        }
    }
    let tier_one: Vec<AgentSet> = ts.tiers.first().cloned().unwrap_or_default();
    for &(i, raw) in &column {
        let solo_in_matrix = cfg.is_positive(raw);
        let solo_in_tiers = tier_one.contains(&AgentSet::singleton(i));
        if solo_in_matrix != solo_in_tiers {
            return Err(Error::Inconsistent(format!(
                "agent {i}: FeAR on {j} is {raw} but tier-1 membership is {solo_in_tiers}"
            )));
        }
    }
    let mut records = Vec::new();
    for (n, tier) in ts.tiers.iter().enumerate() {
        let mediators = ts.mediators_of(n + 1);
        for &group in tier {
            let kind = match (n == 0, group.len() == 1) {
                (true, true) => InfluenceKind::Solo,
                (true, false) => InfluenceKind::Coupled,
                (false, true) => InfluenceKind::Mediated,
                (false, false) => InfluenceKind::MediatedCoupled,
            };
            records.push(InfluenceRecord { kind, actors: group, mediators, affected: j });
        }
    }
    Ok(records)
}
