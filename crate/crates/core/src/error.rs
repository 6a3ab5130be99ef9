//! Crate-wide error type.

use alloc::string::String;
use thiserror::Error;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Series shorter than one window plus prediction horizon.
    #[error("series too short: {len} samples, need at least {need}")]
    SeriesTooShort { len: usize, need: usize },

    /// Channels of a multivariate operation differ in length.
    #[error("channel length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A statistic is undefined because the input has no variation.
    #[error("degenerate series: {reason}")]
    DegenerateSeries { reason: String },

    /// Both coherence inputs must carry signal; an all-zero window has none.
    #[error("degenerate window: channel {channel} is identically zero")]
    DegenerateWindow { channel: usize },

    /// Tensor or grid shapes are inconsistent for the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    /// The least-squares design matrix is rank-deficient.
    #[error("singular design matrix: {detail}")]
    SingularDesign { detail: String },

    /// Prediction requested with fewer samples than the model order.
    #[error("insufficient history: got {got} samples, model order {order}")]
    InsufficientHistory { got: usize, order: usize },

    /// `backward` was called on a non-scalar node.
    #[error("backward requires a scalar loss, got a tensor of {len} elements")]
    NotScalar { len: usize },

    /// A NaN or infinity appeared during forward or backward computation.
    #[error("non-finite value in {op}")]
    NonFinite { op: &'static str },

    /// Training aborted because the loss left the finite range.
    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    /// A configuration value violates its documented range or consistency rule.
    #[error("invalid config: {0}")]
    ConfigError(String),

    /// Operation needs two channels but was given one.
    #[error("operation requires dual-channel data")]
    SingleChannelData,

    /// A cross-validation fold retains too few test windows.
    #[error("fold {fold} keeps {test_windows} test windows, need at least {min}")]
    FoldTooSmall {
        fold: usize,
        test_windows: usize,
        min: usize,
    },

    /// Input data contains NaN or infinite samples.
    #[error("non-finite input sample at index {index}")]
    NonFiniteInput { index: usize },
}

pub type CoreResult<T> = core::result::Result<T, CoreError>;
