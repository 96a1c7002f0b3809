use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: response indicator and outcome cell disagree ({detail})")]
    InconsistentMissingness { row: usize, detail: &'static str },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column `{0}` has fewer than two distinct values")]
    DegenerateDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point coordinate {value} lies outside [0, 1]")]
    OutOfDomain { value: f64 },

    #[error("derivative order {order} exceeds the allowed maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },

    #[error("{complete} complete cases, at least {needed} required")]
    TooFewCompleteCases { complete: usize, needed: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("shadow variable is not associated with the outcome (f1 == f0)")]
    DegenerateShadow,

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("fold {fold} has {size} usable rows, at least {needed} required")]
    FoldTooSmall {
        fold: usize,
        size: usize,
        needed: usize,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure(_) | Error::NonConvergence(_) => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// The innermost error beneath any stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
