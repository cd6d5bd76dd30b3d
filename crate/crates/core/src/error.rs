use thiserror::Error;

use crate::model::{Literal, State};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("operator a{op} is not applicable in state {state}")]
    Inapplicable { op: usize, state: State },

    #[error("operator a{op} is not applicable in every state of the belief (witness {witness})")]
    InapplicableInBelief { op: usize, witness: State },

    #[error("the two problems are identical")]
    NoDelta,

    #[error("the two problems differ in {} propositions", .0.len())]
    MultiDelta(Vec<Literal>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}
