use thiserror::Error;

/// Library-wide error type. Variants map onto CLI exit codes: domain, regime,
/// config and grid errors exit 2; budget exhaustion exits 3.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An analytic function was evaluated outside its domain
    /// (e.g. a moment generating function beyond its abscissa of convergence).
    #[error("domain error: {0}")]
    Domain(String),

    /// The model is in a regime where the requested quantity does not exist
    /// or is infinite (e.g. ladder data with non-negative drift).
    #[error("regime error: {0}")]
    Regime(String),

    /// Inconsistent or invalid run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A lookup fell outside a tabulated passage grid.
    #[error("grid error: {0}")]
    Grid(String),

    /// A certified bound could not be attained within the replica budget.
    #[error("budget error: {0}")]
    Budget(String),

    /// A rejection sampler's acceptance rate collapsed below its floor.
    #[error("rejection budget error: {0}")]
    RejectionBudget(String),

    /// A conditional estimator observed too few qualifying events.
    #[error("no hits: {0}")]
    NoHits(String),

    /// Grid cache file malformed or written by an incompatible version.
    #[error("cache format error: {0}")]
    CacheFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
