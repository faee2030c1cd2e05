use thiserror::Error;

/// Errors raised across the laboratory.
///
/// Negative numerical findings (a curvature sign failing, a bound with a
/// negative margin) are report content, never errors. Errors are reserved for
/// calls whose preconditions do not hold.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {r} outside domain [{lo}, {hi}]")]
    Domain { r: f64, lo: f64, hi: f64 },

    #[error("radius {r} at or below the pole cutoff")]
    Pole { r: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported manifold kind: {0}")]
    UnsupportedKind(String),

    #[error("flux {flux} infeasible: eta^(m-1) <= |flux| first at r = {radius}")]
    FluxInfeasible { flux: f64, radius: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
