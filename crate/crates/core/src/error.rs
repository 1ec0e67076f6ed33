use thiserror::Error;

use crate::model::{ActionId, StateId, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("no states")]
    NoStates,

    #[error("duplicate kernel entry for (x={x}, u={u}, to={to})")]
    DuplicateTransition { x: StateId, u: ActionId, to: StateId },

    #[error("duplicate reward entry for (x={x}, u={u})")]
    DuplicateReward { x: StateId, u: ActionId },

    #[error("kernel entry for action {u} which is not feasible at state {x}")]
    InfeasiblePair { x: StateId, u: ActionId },

    #[error("unknown state reference {0:?}")]
    UnknownState(String),

    #[error("unknown action reference {0:?}")]
    UnknownAction(String),

    #[error("invalid model: {0}")]
    Invalid(ValidationReport),

    #[error("policy does not match model: {0}")]
    PolicyMismatch(String),

    #[error("state sets overlap at state {0}")]
    OverlappingSets(StateId),

    #[error("set {what} is not closed under the policy (mass {mass:e} leaves from state {state})")]
    NotClosed {
        what: &'static str,
        state: StateId,
        mass: f64,
    },

    #[error("target set cannot be made closed: no action keeps state {0} inside it")]
    NotClosable(StateId),

    #[error("reward is missing for feasible pair (x={x}, u={u})")]
    MissingReward { x: StateId, u: ActionId },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("policy has no action mass at state {0}")]
    EmptyPolicyRow(StateId),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
