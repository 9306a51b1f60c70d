use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} must be a positive rate, got {value}")]
    NonPositiveRate { name: &'static str, value: f64 },
    #[error("coupling magnitude must be nonnegative, got {0}")]
    NegativeCoupling(f64),
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("response denominator vanishes at delta_p = {0}")]
    DenominatorZero(f64),
    #[error("slab phase is degenerate (exp(2ikL) = 1)")]
    DegenerateSlabPhase,
    #[error("response coefficient vanishes (perfect mirror)")]
    PerfectMirror,
    #[error("slab retrieval did not converge: {0}")]
    NoConvergence(String),

    #[error("root residual {residual:e} exceeds tolerance {tolerance:e}")]
    IllConditioned { residual: f64, tolerance: f64 },
    #[error("singularity at {location} lies within {linewidths:.2} linewidths of the window edge")]
    WindowTooNarrow { location: String, linewidths: f64 },

    #[error("drift matrix is not stable (max real eigenvalue {0:e})")]
    Unstable(f64),
    #[error("drift matrix eigenvectors are ill-conditioned (condition number {0:e})")]
    DefectiveMatrix(f64),
    #[error("covariance is unphysical: {0}")]
    UnphysicalCovariance(String),
    #[error("single-mode moments are unphysical: |<a^2>|^2 = {a_sq_norm_sqr:e} > n(n+1) = {bound:e}")]
    UnphysicalMoments { a_sq_norm_sqr: f64, bound: f64 },
    #[error("negative symplectic discriminant {0:e}")]
    NegativeDiscriminant(f64),
    #[error("symplectic eigenvalue must be positive, got {0}")]
    NonPositiveEta(f64),

    #[error("coupling grid is empty")]
    EmptyGrid,
    #[error("coupling grid must be strictly increasing")]
    UnsortedGrid,
    #[error("no sign change of {quantity} on [{lo}, {hi}]")]
    NoSignChange { quantity: &'static str, lo: f64, hi: f64 },
    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveRate { .. }
                | Error::NegativeCoupling(_)
                | Error::NonFinite { .. }
                | Error::InvalidParameter(_)
                | Error::EmptyGrid
                | Error::UnsortedGrid
                | Error::InvalidBracket(_)
                | Error::Config(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
