use crate::model::{Prob, Word};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "enumeration budget exceeded at j = {j}: |K_j| = {kernel} needs {assignments} assignments, budget is {budget}"
    )]
    Budget {
        j: usize,
        kernel: usize,
        assignments: f64,
        budget: u64,
    },

    #[error("{what} needs {needed} items, budget is {budget}")]
    Infeasible {
        what: String,
        needed: f64,
        budget: u64,
    },

    #[error(
        "derandomization failed for z = {z} after {attempts} attempts; worst input {worst} has error {error}"
    )]
    Derandomization {
        z: usize,
        attempts: u32,
        worst: Word,
        error: Prob,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("equitable coloring did not balance within {0} moves")]
    ColoringBudget(u64),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
