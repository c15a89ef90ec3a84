//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Schur stable: spectral radius estimate {rho} exceeds {limit}")]
    UnstableMatrix { rho: f64, limit: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {gap:e}")]
    NotSymmetric { gap: f64 },

    #[error("matrix has a negative entry at ({i}, {j})")]
    NotNonnegative { i: usize, j: usize },

    #[error("linear system is numerically singular (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("norm renormalization overflowed; spectral estimate unreliable")]
    Overflow,

    #[error("invalid topology spec: {0}")]
    BadSpec(String),

    #[error("invalid balance config: {0}")]
    BadConfig(String),

    #[error("shock is not a unit vector: |omega| = {0}")]
    BadShock(f64),

    #[error("exponent pattern too large: {0}")]
    PatternTooLarge(String),

    #[error("gain matrix is numerically singular (eigenvalue {0:e})")]
    SingularGain(f64),

    #[error("closed loop unstable: gain eigenvalue {0} outside (0, 2)")]
    UnstableClosedLoop(f64),

    #[error("tail unresolved: zero hits at tau = {0}")]
    TailUnresolved(f64),

    #[error("insufficient grid for a scaling fit: {0}")]
    InsufficientGrid(String),

    #[error("cannot compare studies of different measures")]
    MeasureMismatch,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("negative entry at ({i}, {j}): {value}")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("all-zero row for sector {0:?}")]
    ZeroRow(String),

    #[error("horizon too short: increment {increment:e} still above tolerance at t = {horizon}")]
    HorizonTooShort { horizon: usize, increment: f64 },

    #[error("while generating network of size {n}: {source}")]
    AtSize {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the network size at which it occurred.
    pub fn at_size(self, n: usize) -> Self {
        Error::AtSize {
            n,
            source: Box::new(self),
        }
    }
}
