use alloc::string::String;

/// Errors raised by the samplers and model constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model parameter is outside its domain (e.g. `|phi| >= 1`).
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    /// An input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Every particle weight is zero (all log-weights are `-inf` or NaN).
    #[error("degenerate particle weights at t = {t}")]
    DegenerateWeights { t: usize },
    /// A matrix that must be positive definite could not be factorized.
    #[error("numerical conditioning failure: {0}")]
    Conditioning(String),
    /// The spline basis has no spread (all rescaled inputs equal, or the
    /// kernel Gram matrix has no usable eigenvalues).
    #[error("rank-deficient spline basis: {0}")]
    RankDeficient(String),
    /// The particle filter degenerated more often than the retry budget allows.
    #[error("particle filter degenerated {retries} times in sweep {sweep}")]
    PersistentDegeneracy { sweep: usize, retries: usize },
    /// Summaries were requested from an empty draw store.
    #[error("no draws to summarize")]
    EmptyDraws,
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWeights { .. }
                | Error::Conditioning(_)
                | Error::RankDeficient(_)
                | Error::PersistentDegeneracy { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
