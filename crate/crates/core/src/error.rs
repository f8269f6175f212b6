use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter outside its domain: {0}")]
    Domain(String),

    #[error("series too short: need at least {needed}, got {got}")]
    Length { needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("likelihood has no support on the evaluation grid: {0}")]
    Support(String),

    #[error("optimizer failed: {0}")]
    Fit(String),

    #[error("matrix is not positive definite: {0}")]
    Conditioning(String),

    #[error("prior admits almost no mass: acceptance rate {rate:e} over {trials} trials")]
    DegeneratePrior { rate: f64, trials: u64 },

    #[error("sample is degenerate: {0}")]
    DegenerateSample(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("too many non-finite distances: {bad} of {total}")]
    NonFinite { bad: usize, total: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Configuration and parameter errors are the caller's fault, everything else is numerical.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Domain(_) | Error::Length { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
