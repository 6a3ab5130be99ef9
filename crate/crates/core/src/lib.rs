//! Core algorithms for dual-channel one-step-ahead forecasting of
//! band-limited neural-style signals.
//!
//! The crate covers the full modeling stack:
//!
//! - [`signal`] — series types, the sliding-window sampler, z-score
//!   normalization and the shared evaluation metrics
//! - [`wavelet`] — Morlet continuous wavelet transform producing scalograms
//! - [`coherence`] — smoothed wavelet coherence maps between two channels
//! - [`linear`] — AR/VAR least-squares baselines with AIC/BIC order selection
//! - [`neural`] — a reverse-mode autodiff tape with dense and convolutional
//!   LSTM cells, plus Adam
//! - [`forecast`] — the three neural forecasters, training with early
//!   stopping, and purged k-fold cross-validation
//! - [`synth`] — seedable dual-channel generators for the coupling regimes
//!   used in benchmarks
//!
//! Everything here is pure computation over `alloc`; file formats, the CLI,
//! and timing live in the companion `lfpcast` crate. The crate builds
//! without `std` (disable default features) using `libm` for float math.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod coherence;
pub mod error;
pub mod forecast;
pub mod linear;
pub(crate) mod math;
pub mod neural;
pub mod signal;
pub mod synth;
pub mod wavelet;

pub use error::CoreError;

/// Time source used to stamp per-fold durations in cross-validation reports.
///
/// The core crate has no clock of its own; callers that want wall-clock
/// timings pass one in, everyone else uses [`NullClock`].
pub trait Clock {
    fn now_secs(&self) -> f64;
}

/// Clock that always reads zero. Reports built with it carry zero durations.
pub struct NullClock;

impl Clock for NullClock {
    fn now_secs(&self) -> f64 {
        0.0
    }
}
