use thiserror::Error;

/// Errors produced by the fitting, screening, simulation and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {column} has zero sample variance")]
    ConstantColumn { column: usize },

    #[error("basis for pair (target {target}, regressor {regressor}) is rank deficient after centering")]
    RankDeficient { target: usize, regressor: usize },

    #[error(
        "matrix is rank deficient: smallest singular value {sigma_min:.3e} is below {threshold:.3e}"
    )]
    RankDeficientMatrix { sigma_min: f64, threshold: f64 },

    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("residual sum of squares for column {column} is zero; fit is saturated")]
    ZeroResidual { column: usize },

    #[error("requested {requested} edges but only {available} distinct pairs exist")]
    TooManyEdges { requested: usize, available: usize },

    #[error("structural component for edge {parent} -> {child} has near-zero variance and cannot be rescaled")]
    DegenerateComponent { parent: usize, child: usize },

    #[error("graph dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("invalid causal ordering: {reason}")]
    InvalidOrdering { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(context: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
        }
    }
}
