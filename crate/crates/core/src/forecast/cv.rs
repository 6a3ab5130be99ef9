//! Purged k-fold cross-validation over contiguous blocks of the timeline.
//!
//! Stride-1 windows share almost all of their samples, so random-window
//! folds would leak test information into training wholesale. Folds here
//! are contiguous blocks; a window trains only if its full span (input plus
//! target) stays `purge_gap` samples clear of the test block, and it tests
//! only if its span lies entirely inside the block.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::signal::{make_windows, TimeSeries, WindowConfig};
use crate::Clock;

use super::{evaluate, mix_seed, ForecastModel, ModelKind, ModelSpec, TrainConfig, TrainData};

/// Fold shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub k: usize,
    /// Exclusion margin, in samples, on each side of a test block.
    pub purge_gap: usize,
    /// Minimum test windows a fold must retain.
    pub min_test_windows: usize,
}

impl CvConfig {
    /// k folds with the default margin of one full window span
    /// (window_len + horizon) on each side.
    pub fn new(k: usize, window: &WindowConfig) -> Self {
        Self {
            k,
            purge_gap: window.span(),
            min_test_windows: 50,
        }
    }
}

/// One fold: the test block `[test_lo, test_hi)` plus the window ids (into
/// the full-series window enumeration) assigned to each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub fold: usize,
    pub test_lo: usize,
    pub test_hi: usize,
    pub train_windows: Vec<usize>,
    pub test_windows: Vec<usize>,
}

/// Inclusive source-index span of window `id`: input samples plus target.
fn window_span(id: usize, window: &WindowConfig) -> (usize, usize) {
    let start = id * window.stride;
    (start, start + window.span() - 1)
}

/// Contiguous-block fold assignment over `n_samples`.
pub fn plan_folds(
    n_samples: usize,
    k: usize,
    window: &WindowConfig,
    purge_gap: usize,
) -> CoreResult<Vec<FoldPlan>> {
    window.validate()?;
    if k < 2 {
        return Err(CoreError::ConfigError(format!("k must be >= 2, got {k}")));
    }
    if n_samples < window.span() {
        return Err(CoreError::SeriesTooShort {
            len: n_samples,
            need: window.span(),
        });
    }
    let n_windows = (n_samples - window.span()) / window.stride + 1;

    let mut plans = Vec::with_capacity(k);
    for fold in 0..k {
        let test_lo = fold * n_samples / k;
        let test_hi = (fold + 1) * n_samples / k;
        let excl_lo = test_lo.saturating_sub(purge_gap);
        let excl_hi = test_hi + purge_gap; // exclusive

        let mut train_windows = Vec::new();
        let mut test_windows = Vec::new();
        for id in 0..n_windows {
            let (lo, hi) = window_span(id, window);
            if lo >= test_lo && hi < test_hi {
                test_windows.push(id);
            } else if hi < excl_lo || lo >= excl_hi {
                train_windows.push(id);
            }
            // Windows inside the margin belong to neither side.
        }
        plans.push(FoldPlan {
            fold,
            test_lo,
            test_hi,
            train_windows,
            test_windows,
        });
    }
    Ok(plans)
}

/// Metrics for one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub fold: usize,
    pub test_lo: usize,
    pub test_hi: usize,
    pub n_train_windows: usize,
    pub n_test_windows: usize,
    /// Per-channel coefficient of determination, original units.
    pub r2: Vec<f64>,
    pub mse: Vec<f64>,
    pub seconds: f64,
}

/// Aggregated cross-validation result.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub kind: ModelKind,
    pub k: usize,
    pub purge_gap: usize,
    pub n_samples: usize,
    pub folds: Vec<FoldMetrics>,
    /// Per-channel mean of fold R-squared values.
    pub mean_r2: Vec<f64>,
    /// Per-channel sample standard deviation across folds.
    pub std_r2: Vec<f64>,
    pub config_echo: String,
}

/// Runs purged k-fold CV for one model recipe: per fold, refit from scratch
/// on the purged training side and score on the test block.
pub fn cross_validate(
    spec: &ModelSpec,
    series: &[&TimeSeries],
    window: &WindowConfig,
    cv: &CvConfig,
    tc: &TrainConfig,
    clock: &dyn Clock,
) -> CoreResult<CvReport> {
    if series.is_empty() || series.len() > 2 {
        return Err(CoreError::ConfigError(format!(
            "cross_validate expects 1 or 2 channels, got {}",
            series.len()
        )));
    }
    let n = series[0].len();
    for s in &series[1..] {
        if s.len() != n {
            return Err(CoreError::LengthMismatch {
                left: n,
                right: s.len(),
            });
        }
    }
    let plans = plan_folds(n, cv.k, window, cv.purge_gap)?;
    for plan in &plans {
        if plan.test_windows.len() < cv.min_test_windows {
            return Err(CoreError::FoldTooSmall {
                fold: plan.fold,
                test_windows: plan.test_windows.len(),
                min: cv.min_test_windows,
            });
        }
    }

    let full_ds = make_windows(series, window)?;
    let mut folds = Vec::with_capacity(plans.len());
    for plan in &plans {
        let started = clock.now_secs();

        // Training side: the timeline minus the expanded test block, as up
        // to two contiguous segments.
        let mut segments: Vec<Vec<&[f64]>> = Vec::new();
        let left_hi = plan.test_lo.saturating_sub(cv.purge_gap);
        if left_hi >= window.span() {
            segments.push(series.iter().map(|s| &s.values()[..left_hi]).collect());
        }
        let right_lo = (plan.test_hi + cv.purge_gap).min(n);
        if n.saturating_sub(right_lo) >= window.span() {
            segments.push(series.iter().map(|s| &s.values()[right_lo..]).collect());
        }
        if segments.is_empty() {
            return Err(CoreError::FoldTooSmall {
                fold: plan.fold,
                test_windows: 0,
                min: 1,
            });
        }

        let mut model = ForecastModel::from_spec(spec.clone(), *window)?;
        let mut fold_tc = *tc;
        fold_tc.seed = mix_seed(tc.seed, 0x5EED_0000 + plan.fold as u64);
        model.fit(&TrainData { segments }, &fold_tc)?;

        let test_ds = full_ds.subset(&plan.test_windows);
        let report = evaluate(&model, &test_ds)?;

        folds.push(FoldMetrics {
            fold: plan.fold,
            test_lo: plan.test_lo,
            test_hi: plan.test_hi,
            n_train_windows: plan.train_windows.len(),
            n_test_windows: plan.test_windows.len(),
            r2: report.r2,
            mse: report.mse,
            seconds: clock.now_secs() - started,
        });
    }

    let n_channels = folds[0].r2.len();
    let kf = folds.len() as f64;
    let mut mean_r2 = Vec::with_capacity(n_channels);
    let mut std_r2 = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        let mean = folds.iter().map(|f| f.r2[c]).sum::<f64>() / kf;
        let var = if folds.len() > 1 {
            folds
                .iter()
                .map(|f| (f.r2[c] - mean) * (f.r2[c] - mean))
                .sum::<f64>()
                / (kf - 1.0)
        } else {
            0.0
        };
        mean_r2.push(mean);
        std_r2.push(crate::math::sqrt(var));
    }

    let config_echo = format!(
        "model={} k={} purge_gap={} n_samples={} window_len={} stride={} horizon={} seed={}",
        spec.kind().name(),
        cv.k,
        cv.purge_gap,
        n,
        window.window_len,
        window.stride,
        window.horizon,
        tc.seed,
    );

    Ok(CvReport {
        kind: spec.kind(),
        k: cv.k,
        purge_gap: cv.purge_gap,
        n_samples: n,
        folds,
        mean_r2,
        std_r2,
        config_echo,
    })
}
