//! Series types, the sliding-window sampler, z-score normalization, and the
//! evaluation metrics shared by every model.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math;

/// A uniformly sampled scalar channel.
///
/// `sample_rate` is metadata only; every algorithm in this crate works in
/// units of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    sample_rate: f64,
    label: String,
}

impl TimeSeries {
    /// Builds a series, rejecting empty input, non-finite samples, and
    /// non-positive sample rates.
    pub fn new(values: Vec<f64>, sample_rate: f64, label: &str) -> CoreResult<Self> {
        if values.is_empty() {
            return Err(CoreError::SeriesTooShort { len: 0, need: 1 });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteInput { index });
        }
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(CoreError::ConfigError(format!(
                "sample_rate must be positive and finite, got {sample_rate}"
            )));
        }
        Ok(Self {
            values,
            sample_rate,
            label: label.to_string(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Sliding-window parameters for one-step-ahead sampling.
///
/// At the defaults (length 12, stride 1, horizon 1) consecutive windows
/// overlap by 11 samples and each window predicts the sample immediately
/// after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub window_len: usize,
    pub stride: usize,
    pub horizon: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 12,
            stride: 1,
            horizon: 1,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> CoreResult<()> {
        if self.window_len < 2 {
            return Err(CoreError::ConfigError(format!(
                "window_len must be at least 2, got {}",
                self.window_len
            )));
        }
        if self.stride < 1 {
            return Err(CoreError::ConfigError("stride must be at least 1".into()));
        }
        if self.horizon < 1 {
            return Err(CoreError::ConfigError("horizon must be at least 1".into()));
        }
        Ok(())
    }

    /// Samples shared between consecutive windows (11 at the defaults).
    pub fn overlap(&self) -> usize {
        self.window_len.saturating_sub(self.stride)
    }

    /// Total source span of one sample: input window plus horizon.
    pub fn span(&self) -> usize {
        self.window_len + self.horizon
    }
}

/// Aligned (input window, next-sample target) pairs for 1 or 2 channels,
/// windowed in lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    /// `inputs[i][c]` is channel `c` of sample `i`, `window_len` values.
    pub inputs: Vec<Vec<Vec<f64>>>,
    /// `targets[i][c]` is the value to predict for channel `c`.
    pub targets: Vec<Vec<f64>>,
    /// Start index `t` of each window in the source series.
    pub start_indices: Vec<usize>,
    pub config: WindowConfig,
    pub n_channels: usize,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Restricts the dataset to the samples selected by `ids` (in order).
    pub fn subset(&self, ids: &[usize]) -> Self {
        Self {
            inputs: ids.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: ids.iter().map(|&i| self.targets[i].clone()).collect(),
            start_indices: ids.iter().map(|&i| self.start_indices[i]).collect(),
            config: self.config,
            n_channels: self.n_channels,
        }
    }
}

/// Slides a window over one or two equal-length channels.
///
/// Sample `i` starts at `t = i * stride`; its input is
/// `source[t .. t + window_len]` and its target is
/// `source[t + window_len + horizon - 1]`, per channel.
pub fn make_windows(series: &[&TimeSeries], cfg: &WindowConfig) -> CoreResult<WindowedDataset> {
    cfg.validate()?;
    if series.is_empty() || series.len() > 2 {
        return Err(CoreError::ConfigError(format!(
            "make_windows expects 1 or 2 channels, got {}",
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
    if n < cfg.span() {
        return Err(CoreError::SeriesTooShort {
            len: n,
            need: cfg.span(),
        });
    }

    let last_start = n - cfg.span();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut start_indices = Vec::new();
    let mut t = 0;
    while t <= last_start {
        let mut sample_inputs = Vec::with_capacity(series.len());
        let mut sample_targets = Vec::with_capacity(series.len());
        for s in series {
            let v = s.values();
            sample_inputs.push(v[t..t + cfg.window_len].to_vec());
            sample_targets.push(v[t + cfg.window_len + cfg.horizon - 1]);
        }
        inputs.push(sample_inputs);
        targets.push(sample_targets);
        start_indices.push(t);
        t += cfg.stride;
    }

    Ok(WindowedDataset {
        inputs,
        targets,
        start_indices,
        config: *cfg,
        n_channels: series.len(),
    })
}

/// Mean and population (1/N) standard deviation of a training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

/// Fits z-score statistics on training values only.
///
/// Uses the population (1/N) standard deviation so that stored statistics
/// are reproducible from the definition alone.
pub fn zscore_fit(train_values: &[f64]) -> CoreResult<NormStats> {
    if train_values.len() < 2 {
        return Err(CoreError::DegenerateSeries {
            reason: format!("need at least 2 values to fit, got {}", train_values.len()),
        });
    }
    if let Some(index) = train_values.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteInput { index });
    }
    let n = train_values.len() as f64;
    let mean = train_values.iter().sum::<f64>() / n;
    let var = train_values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = math::sqrt(var);
    if std == 0.0 {
        return Err(CoreError::DegenerateSeries {
            reason: "zero variance (constant input)".into(),
        });
    }
    Ok(NormStats { mean, std })
}

pub fn zscore_apply(values: &[f64], stats: &NormStats) -> CoreResult<Vec<f64>> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteInput { index });
    }
    Ok(values.iter().map(|v| (v - stats.mean) / stats.std).collect())
}

pub fn zscore_invert(values: &[f64], stats: &NormStats) -> CoreResult<Vec<f64>> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteInput { index });
    }
    Ok(values.iter().map(|v| v * stats.std + stats.mean).collect())
}

/// Pearson product-moment correlation coefficient.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> CoreResult<f64> {
    if x.len() != y.len() {
        return Err(CoreError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(CoreError::DegenerateSeries {
            reason: "correlation needs at least 2 samples".into(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CoreError::DegenerateSeries {
            reason: "correlation undefined for constant input".into(),
        });
    }
    Ok(sxy / math::sqrt(sxx * syy))
}

/// Coefficient of determination, `1 - SS_res / SS_tot`, with `SS_tot` taken
/// about the target mean. May be negative for predictions worse than the
/// mean.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> CoreResult<f64> {
    if predictions.len() != targets.len() {
        return Err(CoreError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if targets.len() < 2 {
        return Err(CoreError::DegenerateSeries {
            reason: "r_squared needs at least 2 samples".into(),
        });
    }
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let ss_tot = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>();
    if ss_tot == 0.0 {
        return Err(CoreError::DegenerateSeries {
            reason: "r_squared undefined for constant targets".into(),
        });
    }
    let ss_res = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>();
    Ok(1.0 - ss_res / ss_tot)
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> CoreResult<f64> {
    if predictions.len() != targets.len() {
        return Err(CoreError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(CoreError::DegenerateSeries {
            reason: "mse of empty input".into(),
        });
    }
    let n = predictions.len() as f64;
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}
