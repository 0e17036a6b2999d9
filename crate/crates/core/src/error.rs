//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A channel column is unusable for precoding (e.g. exactly zero).
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// The estimated channel matrix is (numerically) rank deficient.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// An objective was evaluated where a log argument is non-positive.
    #[error("objective out of domain: {0}")]
    OutOfDomain(String),

    /// An iterative solver hit its iteration cap before its certificate held.
    /// Carries the last iterate so callers can inspect or restart.
    #[error("solver stopped after {iterations} iterations with residual {residual:.3e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    /// Failure inside a Monte Carlo campaign, tagged with the work unit.
    #[error("campaign failed at drop {drop}{}: {source}",
            match .realization { Some(r) => format!(", realization {r}"), None => String::new() })]
    Campaign {
        drop: usize,
        realization: Option<usize>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_drop(self, drop: usize, realization: Option<usize>) -> Error {
        Error::Campaign {
            drop,
            realization,
            source: Box::new(self),
        }
    }
}
