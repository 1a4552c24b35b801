use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants carry enough context (cell index, iteration count, last residual)
/// to locate the failure without re-running.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("velocity grid cannot resolve the state: {0}")]
    Resolution(String),

    #[error("degenerate macroscopic state in cell {cell}: rho = {rho:e}, theta = {theta:e}")]
    DegenerateState { cell: usize, rho: f64, theta: f64 },

    #[error("input is not microscopic: max |moment| = {max_moment:e} exceeds {tol:e}")]
    NotMicroscopic { max_moment: f64, tol: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("monotonicity violated: {0}")]
    NonMonotone(String),

    #[error("negative profile value: {0}")]
    NegativeProfile(String),

    #[error("time step {step}: {reason}")]
    Solver { step: u64, reason: String, dump: Option<String> },

    #[error("not enough data for a fit: {0}")]
    InsufficientData(String),

    #[error("region leaves the computational domain: {0}")]
    RegionOutsideDomain(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
