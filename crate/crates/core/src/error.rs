use thiserror::Error;

use crate::thermo::PressureEstimate;

/// Errors produced by the model, pressure, measure and spectrum routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("word of length {len} is shorter than the potential level {level}")]
    UnderdeterminedWord { len: usize, level: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("infeasible model: {0}")]
    InfeasibleModel(String),

    #[error("truncation to {requested} branches exceeds the {available} available")]
    TruncationTooLarge { requested: usize, available: usize },

    #[error("enumeration budget of {budget} word evaluations exceeded at level {level}")]
    BudgetExceeded {
        budget: u64,
        level: usize,
        partial: Box<PressureEstimate>,
    },

    #[error("s_inf is undetermined: {0}")]
    Undetermined(String),

    #[error("bracket [{lo}, {hi}] does not straddle a root (values {f_lo}, {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("constraints infeasible at truncation q={q}, n={n}")]
    Infeasible { q: usize, n: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
