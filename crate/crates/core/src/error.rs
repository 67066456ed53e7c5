use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Two planes that must share dimensions do not.
    #[error("dimension mismatch: {context}: {left_height}x{left_width} vs {right_height}x{right_width}")]
    DimensionMismatch {
        context: &'static str,
        left_height: usize,
        left_width: usize,
        right_height: usize,
        right_width: usize,
    },

    /// A plane dimension is unusable for the requested operation.
    #[error("invalid dimensions {height}x{width}: {reason}")]
    InvalidDimensions {
        height: usize,
        width: usize,
        reason: &'static str,
    },

    /// A scalar parameter is outside its documented domain.
    #[error("invalid parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Not enough input images (or samples) for the requested estimate.
    #[error("need at least {required} inputs, got {actual}")]
    NotEnoughInputs { required: usize, actual: usize },

    /// An image or fingerprint file could not be parsed.
    #[error("malformed {format} data: {reason}")]
    MalformedData { format: &'static str, reason: String },

    /// The LP solver could not produce a usable solution.
    #[error("linear program {status}: {context}")]
    Infeasible { status: &'static str, context: String },

    /// The input carries no signal the requested statistic can use
    /// (constant planes, all-zero subbands, zero spread).
    #[error("degenerate input: {context}")]
    Degenerate { context: String },

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {context}")]
    Numerical { context: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            context,
            left_height: left.0,
            left_width: left.1,
            right_height: right.0,
            right_width: right.1,
        }
    }
}
