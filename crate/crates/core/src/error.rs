use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input vector is empty")]
    EmptyInput,
    #[error("input contains NaN or infinite values")]
    NonFiniteInput,
    #[error("unsupported bit width {0}, expected 1..=16")]
    InvalidPrecision(u8),
    #[error("bucket step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("quantization boundary must be at least 1, got {0}")]
    InvalidBoundary(u32),
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error("kernel configuration is missing the {0} table")]
    MissingLut(&'static str),
    #[error("lookup tables were built for different precisions")]
    PrecisionMismatch,
    #[error("integer accumulator overflowed")]
    AccumulatorOverflow,
    #[error("floating-point overflow while evaluating {0}")]
    Overflow(&'static str),
    #[error("matrix shapes are incompatible: {0}")]
    ShapeMismatch(&'static str),
    #[error("malformed table header: {0}")]
    MalformedHeader(&'static str),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("unsupported {what} code {code}")]
    UnsupportedVersion { what: &'static str, code: u32 },
    #[error("table entry {index} exceeds the maximum code")]
    CorruptPayload { index: usize },
}
