use thiserror::Error;

use crate::field::ComplexField;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad field dump: {0}")]
    BadDump(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{context}: no convergence after {iterations} iterations (residue {residue:.3e}, cauchy {cauchy:.3e})")]
    Nonconvergence {
        context: String,
        iterations: usize,
        residue: f64,
        cauchy: f64,
        /// Last iterate, for postmortem inspection or restarts.
        last: Box<ComplexField>,
    },

    #[error("near-singular linearized operator: {0}")]
    KrylovStagnation(String),

    #[error("modulation degeneracy at t = {t}: |det A| = {det:.3e}")]
    ModulationDegeneracy { t: f64, det: f64 },

    #[error("trajectory left safety bounds at t = {t}: {what}")]
    TrajectoryBound { t: f64, what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
