use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A negative operator power was requested on a generator with a zero
    /// eigenvalue.
    #[error("singular generator: {0}")]
    Singular(String),

    /// Sample grid too coarse for the requested projection order.
    #[error("resolution too coarse: sample order {m} < projection order {n}")]
    Resolution { m: u32, n: u32 },

    /// The dyadic lattice for a distance computation would exceed the memory
    /// budget; `max_feasible` is the largest grid order that fits.
    #[error("grid order {requested} exceeds the memory budget (largest feasible order: {max_feasible})")]
    Resource { requested: u32, max_feasible: u32 },

    /// An experiment's mathematical hypothesis is violated (e.g. alpha*p >= 1).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Scenario pairs that differ in law parameters, malformed scenario files,
    /// unknown subcommands.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
