//! Full analysis of one interaction: FeAR matrix plus, for every affected
//! agent, tiers, influences, Shapley values, rank vectors and metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fear::{build_games, fear_matrix_from_games, FearConfig, FearMatrix, GroupFearGame};
use crate::grid::{AgentId, GridState, JointAction, MdrProfile};
use crate::influence::{classify_influences, tiering_with, InfluenceRecord, TierStructure};
use crate::metrics::{delta_assertive, median_manhattan, CaseMetrics, TauTriple};
use crate::ranking::{kendall_tau, make_ranks, shapley_with, RankInput, RankSource, RankVector, ShapleyResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSet {
    pub ifear: RankVector,
    pub tier: RankVector,
    pub shapley: RankVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectedAnalysis {
    pub affected: AgentId,
    pub tiers: TierStructure,
    pub influences: Vec<InfluenceRecord>,
    pub shapley: ShapleyResult,
    pub ranks: RankSet,
    pub metrics: CaseMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub matrix: FearMatrix,
    pub affected: Vec<AffectedAnalysis>,
}

impl CaseResult {
    pub fn for_agent(&self, j: AgentId) -> Option<&AffectedAnalysis> {
        self.affected.iter().find(|a| a.affected == j)
    }
}

fn analyze_affected(state: &GridState, game: &GroupFearGame, matrix: &FearMatrix, cfg: &FearConfig) -> Result<AffectedAnalysis> {
    let j = game.affected();
    let k = state.agent_count();
    let tiers = tiering_with(game);
    let influences = classify_influences(&tiers, matrix, cfg)?;
    let shapley = shapley_with(game)?;
    let column = matrix.column(j)?;
    let ifear = make_ranks(RankInput::IFear { affected: j, column: &column }, RankSource::IFear, k, cfg)?;
    let tier = make_ranks(RankInput::Tier(&tiers), RankSource::Tier, k, cfg)?;
    let shap = make_ranks(RankInput::Shapley(&shapley), RankSource::Shapley, k, cfg)?;
    let counts = delta_assertive(&column, &tiers, cfg)?;
    let median = if k >= 2 { median_manhattan(state, j)? } else { 0.0 };
    let taus = TauTriple {
        ifear_tier: kendall_tau(&ifear, &tier)?,
        ifear_shapley: kendall_tau(&ifear, &shap)?,
        tier_shapley: kendall_tau(&tier, &shap)?,
    };
    let metrics = CaseMetrics {
        affected: j,
        delta_assertive: counts.delta_assertive,
        n_assertive_ifear: counts.n_assertive_ifear,
        n_assertive_gfear: counts.n_assertive_gfear,
        median_manhattan: median,
        taus,
    };
    Ok(AffectedAnalysis {
        affected: j,
        tiers,
        influences,
        shapley,
        ranks: RankSet { ifear, tier, shapley: shap },
        metrics,
    })
}

pub fn analyze_case(state: &GridState, joint: &JointAction, mdr: &MdrProfile, cfg: &FearConfig) -> Result<CaseResult> {
    let games = build_games(state, joint, mdr, cfg)?;
    let matrix = fear_matrix_from_games(&games)?;
    let affected = games
        .par_iter()
        .map(|g| analyze_affected(state, g, &matrix, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CaseResult { matrix, affected })
}
