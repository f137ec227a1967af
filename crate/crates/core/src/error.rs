use thiserror::Error;

/// Errors raised while validating models or computing ranking metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("at least two treatments are required, got {0}")]
    TooFewTreatments(usize),
    #[error("empty treatment name at position {0}")]
    EmptyName(usize),
    #[error("duplicate treatment name {0:?}")]
    DuplicateName(String),
    #[error("non-positive standard deviation {value} for treatment {treatment:?}")]
    NonPositiveSd { treatment: String, value: f64 },
    #[error("non-finite {what} for treatment {treatment:?}")]
    NonFinite {
        what: &'static str,
        treatment: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-symmetric covariance matrix at ({row}, {col})")]
    NonSymmetricCovariance { row: usize, col: usize },
    #[error("non-positive variance on the covariance diagonal for treatment {0:?}")]
    NonPositiveVariance(String),
    #[error("covariance matrix is not positive semi-definite (smallest eigenvalue {0:e})")]
    NotPositiveSemiDefinite(f64),
    #[error("empirical model needs at least {min} joint draws, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("missing or non-finite sample value at row {row}, column {col}")]
    MissingSample { row: usize, col: usize },
    #[error("empty sample matrix")]
    EmptySamples,
    #[error("number of draws must be positive")]
    ZeroDraws,
    #[error("unknown treatment {0:?}")]
    UnknownTreatment(String),
    #[error("treatment {0:?} cannot be compared with itself")]
    SelfComparison(String),
    #[error("{0} requires a normal (marginal or joint) model")]
    NonNormalModel(&'static str),
    #[error("negative tie tolerance {0}")]
    NegativeTolerance(f64),
    #[error("hierarchies are over different treatment sets")]
    TreatmentSetMismatch,
    #[error("invalid rank probability matrix: {0}")]
    InvalidRankMatrix(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid question: {0}")]
    InvalidQuestion(String),
}

pub type Result<T> = std::result::Result<T, RankError>;
