//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("truncation index {index} too large for grid (max {max})")]
    CutoffTooLarge { index: usize, max: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(
        "weighted mass solve stalled: residual {residual:.3e} after {iterations} iterations \
         (tol {tol:.3e}); tighten n_cut or relax the tolerance"
    )]
    MassSolve {
        residual: f64,
        tol: f64,
        iterations: usize,
    },

    #[error(
        "implicit step stagnated: residual {residual:.3e} after Newton and Picard fallback; \
         the time step is likely too large"
    )]
    RotheStagnation { residual: f64 },

    #[error("solution lost finiteness at t = {time}; last finite total energy {last_energy:.6e}")]
    Blowup { time: f64, last_energy: f64 },

    #[error("time {t} outside covered range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("ledger: {0}")]
    Ledger(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
