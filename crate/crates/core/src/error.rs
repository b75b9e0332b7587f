use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported order {order}: {reason}")]
    UnsupportedOrder { order: usize, reason: String },

    #[error("size cap exceeded: {what} would need {requested} entries (cap {cap})")]
    SizeCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error(
        "Gram matrix is numerically singular at jitter {jitter:e} (smallest eigenvalue {min_eigenvalue:e}); \
         increase the jitter or remove duplicate points"
    )]
    SingularGram { jitter: f64, min_eigenvalue: f64 },

    #[error("{what} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite {
        what: &'static str,
        min_eigenvalue: f64,
    },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("function returned a non-finite value at sigma-point {point:?}")]
    NonFiniteEvaluation { point: Vec<f64> },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("at time step {k}: {source}")]
    AtStep {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, k: usize) -> Error {
        Error::AtStep {
            k,
            source: Box::new(self),
        }
    }

    /// True for failures caused by the numbers rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularGram { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NonFiniteEvaluation { .. }
            | Error::Optimization(_) => true,
            Error::AtStep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
