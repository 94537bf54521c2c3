use thiserror::Error;

/// Errors produced by matrix construction, metrics, and the quantization
/// pipeline.
#[derive(Error, Debug)]
pub enum SinqError {
    #[error("matrix dimensions too small: {rows}x{cols} (need at least 2x2)")]
    DimensionTooSmall { rows: usize, cols: usize },

    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid matrix data: {0}")]
    InvalidMatrix(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("code {code} out of range for {bits}-bit packing")]
    CodeOutOfRange { code: u8, bits: u8 },

    #[error("packed stream too short: need {needed} bytes, have {have}")]
    TruncatedStream { needed: usize, have: usize },

    #[error("malformed quantized matrix: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, SinqError>;
