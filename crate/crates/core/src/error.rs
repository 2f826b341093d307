use thiserror::Error;

use crate::grid::AgentId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),

    #[error("invalid action `{0}`")]
    InvalidAction(String),

    #[error("invalid grid state: {0}")]
    InvalidState(String),

    #[error("joint action covers {got} agents, state has {expected}")]
    ActionCountMismatch { expected: usize, got: usize },

    #[error("affected agent {0} cannot be part of the acting group")]
    AffectedInGroup(AgentId),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("shapley efficiency violated: sum {sum} vs grand coalition {grand}")]
    EfficiencyViolation { sum: f64, grand: f64 },

    #[error("fixture {path}: {message}")]
    Fixture { path: String, message: String },

    #[error("case (simulation {simulation}, iteration {iteration}): {source}")]
    Case {
        simulation: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}
