//! Interventions, individual and group FeAR, and the pairwise matrix.
//!
//! Every value keeps both its raw ratio and its clipped presentation form.
//! Comparisons elsewhere in the crate always use the raw value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AgentId, AgentSet, FeasibilityTable, GridState, JointAction, MdrProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FearConfig {
    /// Added to every denominator so a zero feasible count stays defined.
    pub epsilon: f64,
    /// Margin for positivity and strict-inequality tests on raw values.
    pub compare_tolerance: f64,
    pub clip_low: f64,
    pub clip_high: f64,
}

impl Default for FearConfig {
    fn default() -> Self {
        FearConfig { epsilon: 1e-6, compare_tolerance: 1e-9, clip_low: -1.0, clip_high: 1.0 }
    }
}

impl FearConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1e-2) {
            return Err(Error::InvalidConfig(format!("epsilon must lie in (0, 0.01), got {}", self.epsilon)));
        }
        if !(self.compare_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "compare_tolerance must be positive, got {}",
                self.compare_tolerance
            )));
        }
        if !(self.clip_low < self.clip_high) {
            return Err(Error::InvalidConfig(format!(
                "clip range [{}, {}] is empty",
                self.clip_low, self.clip_high
            )));
        }
        Ok(())
    }

    pub fn is_positive(&self, x: f64) -> bool {
        x > self.compare_tolerance
    }

    pub fn is_negative(&self, x: f64) -> bool {
        x < -self.compare_tolerance
    }

    /// `a > b` by more than the tolerance.
    pub fn exceeds(&self, a: f64, b: f64) -> bool {
        a > b + self.compare_tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FearValue {
    pub raw: f64,
    pub clipped: f64,
}

impl FearValue {
    pub fn new(raw: f64, cfg: &FearConfig) -> Self {
        FearValue { raw, clipped: clip(raw, cfg) }
    }
}

pub fn clip(x: f64, cfg: &FearConfig) -> f64 {
    x.min(cfg.clip_high).max(cfg.clip_low)
}

/// `A_{G→μ}`: agents in `group` take their MdR, everyone else keeps their action.
pub fn intervene(joint: &JointAction, group: AgentSet, mdr: &MdrProfile) -> Result<JointAction> {
    if mdr.len() != joint.len() {
        return Err(Error::ActionCountMismatch { expected: joint.len(), got: mdr.len() });
    }
    if let Some(bad) = group.difference(AgentSet::all(joint.len())).iter().next() {
        return Err(Error::UnknownAgent(bad));
    }
    let mut out = joint.clone();
    for i in group.iter() {
        out.set(i, mdr.get(i)?)?;
    }
    Ok(out)
}

fn reduction(cf: u32, actual: u32, eps: f64) -> f64 {
    (cf as f64 - actual as f64) / (cf as f64 + eps)
}

/// Group FeAR on one affected agent as a function of the acting group.
#[derive(Debug, Clone)]
pub struct GroupFearGame {
    table: FeasibilityTable,
    agents: AgentSet,
    cfg: FearConfig,
    actual_count: u32,
}

impl GroupFearGame {
    pub fn new(state: &GridState, joint: &JointAction, mdr: &MdrProfile, affected: AgentId, cfg: &FearConfig) -> Result<Self> {
        let table = FeasibilityTable::new(state, joint, mdr, affected)?;
        let actual_count = table.count(AgentSet::EMPTY);
        Ok(GroupFearGame { table, agents: state.all_agents(), cfg: *cfg, actual_count })
    }

    pub fn affected(&self) -> AgentId {
        self.table.affected()
    }

    pub fn config(&self) -> &FearConfig {
        &self.cfg
    }

    /// The coalition universe `¬j`.
    pub fn others(&self) -> AgentSet {
        self.agents.without(self.affected())
    }

    /// `n(s, A, j)`.
    pub fn actual_count(&self) -> u32 {
        self.actual_count
    }

    /// `n(s, A_{G→μ}, j)`. `G` may include `j` itself (used by the self-term).
    pub fn count(&self, group: AgentSet) -> u32 {
        // Intervening on an agent already at its MdR leaves the joint action unchanged.
        let key = group.intersection(self.table.deviating());
        if key.is_empty() {
            return self.actual_count;
        }
        self.table.count(key)
    }

    fn check_group(&self, group: AgentSet) -> Result<()> {
        if let Some(bad) = group.difference(self.agents).iter().next() {
            return Err(Error::UnknownAgent(bad));
        }
        if group.contains(self.affected()) {
            return Err(Error::AffectedInGroup(self.affected()));
        }
        Ok(())
    }

    /// Raw `FeAR_{G,j}`; the empty group gives exactly 0.
    pub fn raw(&self, group: AgentSet) -> f64 {
        if group.is_empty() {
            return 0.0;
        }
        reduction(self.count(group), self.actual_count, self.cfg.epsilon)
    }

    /// Raw FeAR of any group whose counterfactual count is `n_cf`.
    pub fn raw_for_count(&self, n_cf: u32) -> f64 {
        reduction(n_cf, self.actual_count, self.cfg.epsilon)
    }

    pub fn group(&self, group: AgentSet) -> Result<FearValue> {
        self.check_group(group)?;
        Ok(FearValue::new(self.raw(group), &self.cfg))
    }

    pub fn individual(&self, actor: AgentId) -> Result<FearValue> {
        if !self.agents.contains(actor) {
            return Err(Error::UnknownAgent(actor));
        }
        if actor == self.affected() {
            return Ok(FearValue::new(self.self_raw(), &self.cfg));
        }
        self.group(AgentSet::singleton(actor))
    }

    /// `n(s, A, j) / (n(s, A_{¬j→μ}, j) + ε)`.
    pub fn self_raw(&self) -> f64 {
        self.actual_count as f64 / (self.count(self.others()) as f64 + self.cfg.epsilon)
    }

    /// The self-term denominator vanishes: with everyone else at MdR agent `j`
    /// has no feasible action.
    pub fn self_degenerate(&self) -> bool {
        self.count(self.others()) == 0
    }
}

pub fn fear_individual(
    state: &GridState,
    joint: &JointAction,
    mdr: &MdrProfile,
    actor: AgentId,
    affected: AgentId,
    cfg: &FearConfig,
) -> Result<FearValue> {
    state.check_agent(actor)?;
    GroupFearGame::new(state, joint, mdr, affected, cfg)?.individual(actor)
}

pub fn fear_group(
    state: &GridState,
    joint: &JointAction,
    mdr: &MdrProfile,
    group: AgentSet,
    affected: AgentId,
    cfg: &FearConfig,
) -> Result<FearValue> {
    GroupFearGame::new(state, joint, mdr, affected, cfg)?.group(group)
}

/// Pairwise FeAR indexed by (actor, affected); the diagonal holds the
/// self-term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FearMatrix {
    agents: usize,
    /// Row-major: `values[(actor - 1) * agents + (affected - 1)]`.
    values: Vec<FearValue>,
    /// Affected agents whose self-term denominator is degenerate.
    degenerate_self: Vec<AgentId>,
}

impl FearMatrix {
    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn get(&self, actor: AgentId, affected: AgentId) -> Result<FearValue> {
        for id in [actor, affected] {
            if id.0 == 0 || id.0 > self.agents {
                return Err(Error::UnknownAgent(id));
            }
        }
        Ok(self.values[actor.index() * self.agents + affected.index()])
    }

    pub fn raw(&self, actor: AgentId, affected: AgentId) -> f64 {
        self.values[actor.index() * self.agents + affected.index()].raw
    }

    /// Raw FeAR imposed by each other actor on `affected`, in id order.
    pub fn column(&self, affected: AgentId) -> Result<Vec<(AgentId, f64)>> {
        if affected.0 == 0 || affected.0 > self.agents {
            return Err(Error::UnknownAgent(affected));
        }
        Ok((0..self.agents)
            .map(AgentId::from_index)
            .filter(|&i| i != affected)
            .map(|i| (i, self.raw(i, affected)))
            .collect())
    }

    pub fn degenerate_self(&self) -> &[AgentId] {
        &self.degenerate_self
    }
}

pub fn fear_matrix_from_games(games: &[GroupFearGame]) -> Result<FearMatrix> {
    let k = games.len();
    let mut values = vec![FearValue { raw: 0.0, clipped: 0.0 }; k * k];
    let mut degenerate_self = Vec::new();
    for game in games {
        let j = game.affected();
        for i in (0..k).map(AgentId::from_index) {
            values[i.index() * k + j.index()] = game.individual(i)?;
        }
        if game.self_degenerate() {
            degenerate_self.push(j);
        }
    }
    Ok(FearMatrix { agents: k, values, degenerate_self })
}

pub fn build_games(state: &GridState, joint: &JointAction, mdr: &MdrProfile, cfg: &FearConfig) -> Result<Vec<GroupFearGame>> {
    cfg.validate()?;
    state
        .agent_ids()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| GroupFearGame::new(state, joint, mdr, j, cfg))
        .collect()
}

pub fn fear_matrix(state: &GridState, joint: &JointAction, mdr: &MdrProfile, cfg: &FearConfig) -> Result<FearMatrix> {
    fear_matrix_from_games(&build_games(state, joint, mdr, cfg)?)
}
