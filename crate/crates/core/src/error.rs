use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The inner feasible set at `x` is empty or the oracle could not find a feasible point.
    #[error("inner problem infeasible at the query point (Slater violation): {0}")]
    Infeasible(String),

    /// The supplied inner point does not satisfy the KKT stationarity system.
    #[error("point is not stationary: KKT residual {residual:.3e} exceeds {threshold:.3e}")]
    NotStationary { residual: f64, threshold: f64 },

    #[error("alternating projection did not converge in {sweeps} sweeps (residual {residual:.3e})")]
    ProjectionNotConverged { sweeps: usize, residual: f64 },

    #[error("demand is unbounded: good {good} has price {price} but positive valuation")]
    UnboundedDemand { good: usize, price: f64 },

    #[error("utility of buyer {buyer} vanished during ascent")]
    ZeroUtility { buyer: usize },

    #[error("negative consumption {value} for good {good}")]
    NegativeConsumption { good: usize, value: f64 },

    #[error("iterate diverged at iteration {iteration} (norm {norm:.3e})")]
    Diverged { iteration: usize, norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
