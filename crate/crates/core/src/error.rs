use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the estimation toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An interval with `lo > hi` or non-finite bounds.
    #[error("invalid range for {field}: [{lo}, {hi}]")]
    InvalidRange {
        /// Parameter the interval belongs to.
        field: &'static str,
        /// Lower bound.
        lo: f64,
        /// Upper bound.
        hi: f64,
    },
    /// The sample rate does not resolve the requested tone.
    #[error("sample rate {sample_rate_hz} Hz is below twice the tone frequency {frequency_hz} Hz")]
    Nyquist {
        /// Tone frequency.
        frequency_hz: f64,
        /// Sample rate.
        sample_rate_hz: f64,
    },
    /// A scalar argument outside its domain.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// A dataset or sweep was asked for zero records.
    #[error("dataset must contain at least one record")]
    EmptyDataset,
    /// A statistic was requested over an empty set.
    #[error("empty input set")]
    EmptySet,
    /// Window too short for the estimator.
    #[error("window has {len} samples, at least {min} required")]
    WindowTooShort {
        /// Actual length.
        len: usize,
        /// Required length.
        min: usize,
    },
    /// A window contains NaN or infinite samples.
    #[error("window contains non-finite samples")]
    NonFinite,
    /// The window carries no tone (constant after mean removal).
    #[error("no tone present in window")]
    NoTone,
    /// Tensor or window shapes disagree.
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        /// Expected shape.
        expected: Vec<usize>,
        /// Actual shape.
        actual: Vec<usize>,
    },
    /// An optimizer step received a NaN or infinite gradient.
    #[error("non-finite gradient")]
    NonFiniteGradient,
    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}")]
    Divergence {
        /// Zero-based epoch index.
        epoch: usize,
    },
    /// Fringe contrast is undefined (`I_max + I_min <= 0`).
    #[error("fringe contrast undefined: I_max + I_min = {0}")]
    ContrastUndefined(f64),
    /// Invalid configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

/// Crate result alias.
pub type Result<T> = core::result::Result<T, Error>;
