//! Feasible action-space reduction (FeAR) for individuals and groups in
//! grid-world multi-agent interactions.
//!
//! The crate covers the grid and collision model ([`grid`]), individual and
//! group FeAR ([`fear`]), tiering of assertive influences ([`influence`]),
//! Shapley values, rank vectors and Kendall's tau ([`ranking`]), case and
//! batch metrics ([`metrics`]) and the randomised scenario driver
//! ([`scenarios`]).

pub mod analysis;
pub mod error;
pub mod fear;
pub mod fixture;
pub mod grid;
pub mod influence;
pub mod metrics;
pub mod ranking;
pub mod scenarios;

pub use analysis::{analyze_case, AffectedAnalysis, CaseResult, RankSet};
pub use error::{Error, Result};
pub use fear::{clip, fear_group, fear_individual, fear_matrix, intervene, FearConfig, FearMatrix, FearValue, GroupFearGame};
pub use fixture::{build_fixture, bundled, load_fixture, parse_fixture, Fixture};
pub use grid::{
    action_path, apply_moves, count_feasible, enumerate_actions, is_feasible, Action, AgentId, AgentSet, Cell, Direction,
    GridState, JointAction, MdrProfile,
};
pub use influence::{classify_influences, tiering, InfluenceKind, InfluenceRecord, TierStructure};
pub use metrics::{aggregate, delta_assertive, median_manhattan, AggregateReport, CaseMetrics, TaggedMetrics};
pub use ranking::{kendall_tau, make_ranks, shapley_values, RankInput, RankSource, RankVector, ShapleyResult};
pub use scenarios::{run_batch, sample_case, CaseRecord, ScenarioConfig, ScenarioKind};
