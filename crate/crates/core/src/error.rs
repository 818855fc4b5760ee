use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("Newton iteration did not converge after {iterations} iterations (mismatch {mismatch:.3e} pu)")]
    NonConvergence { iterations: usize, mismatch: f64 },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("eigensolve failed: {0}")]
    EigensolveFailure(String),

    #[error("invalid tau: {0} (must be > 0)")]
    InvalidTau(f64),

    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("matrix is effectively defective (eigenvector condition number {condition:.3e} > {threshold:.1e})")]
    EffectivelyDefective { condition: f64, threshold: f64 },

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("infeasible regulation target: {0}")]
    InfeasibleRegulation(String),

    #[error("no real solution: {0}")]
    NoRealSolution(String),

    #[error("infeasible inertia: {0}")]
    InfeasibleInertia(String),

    #[error("non-finite state at t = {time} s")]
    NonFiniteState { time: f64 },

    #[error("trajectory not settled: final-window variation {variation:.3e} exceeds {tolerance:.1e}")]
    NotSettled { variation: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::InvalidArgument(_) | Error::Io(_) => 2,
            Error::InfeasibleRegulation(_)
            | Error::NoRealSolution(_)
            | Error::InfeasibleInertia(_) => 3,
            _ => 4,
        }
    }
}
