//! Per-sample input assembly: raw windows for the baseline LSTM, scalogram
//! images for the single-channel wavelet model, and stacked
//! scalogram/coherence images for the dual-channel model.

use alloc::vec::Vec;

use crate::coherence::{wcoh_from_scalograms, CoherenceForm, SmoothingParams};
use crate::error::{CoreError, CoreResult};
use crate::neural::Tensor;
use crate::signal::{zscore_apply, NormStats, WindowedDataset};
use crate::wavelet::{cwt, WaveletParams};

/// Image composition for the dual-channel coherence model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// One channel: the scalogram of the modeled series (single-channel
    /// models).
    ScalogramSingle,
    /// One channel: the coherence map alone (ablation; discards amplitude).
    CoherenceOnly,
    /// Three channels: both scalograms plus the coherence map.
    CoherencePlusScalograms,
}

impl InputMode {
    pub fn channels(&self) -> usize {
        match self {
            InputMode::ScalogramSingle | InputMode::CoherenceOnly => 1,
            InputMode::CoherencePlusScalograms => 3,
        }
    }
}

/// Ready-to-train samples: one input tensor and one target vector (per
/// head, z-scored units) per window, plus the original-unit targets for
/// metric reporting.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub inputs: Vec<Tensor>,
    pub targets: Vec<Vec<f64>>,
    pub raw_targets: Vec<Vec<f64>>,
    pub input_shape: (usize, usize, usize),
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Raw z-scored windows of one channel as `[1, window_len, 1]` tensors.
pub fn baseline_features(
    ds: &WindowedDataset,
    channel: usize,
    norm: &NormStats,
) -> CoreResult<FeatureSet> {
    check_channel(ds, channel)?;
    let len = ds.config.window_len;
    let mut inputs = Vec::with_capacity(ds.len());
    let mut targets = Vec::with_capacity(ds.len());
    let mut raw_targets = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let window = zscore_apply(&ds.inputs[i][channel], norm)?;
        inputs.push(Tensor::from_vec(&[1, len, 1], window)?);
        let t = ds.targets[i][channel];
        targets.push(alloc::vec![(t - norm.mean) / norm.std]);
        raw_targets.push(alloc::vec![t]);
    }
    Ok(FeatureSet {
        inputs,
        targets,
        raw_targets,
        input_shape: (1, len, 1),
    })
}

/// Scalogram images of one channel as `[n_scales, window_len, 1]` tensors.
pub fn scalogram_features(
    ds: &WindowedDataset,
    channel: usize,
    norm: &NormStats,
    wavelet: &WaveletParams,
) -> CoreResult<FeatureSet> {
    check_channel(ds, channel)?;
    wavelet.validate()?;
    let len = ds.config.window_len;
    let n_scales = wavelet.n_scales;
    let mut inputs = Vec::with_capacity(ds.len());
    let mut targets = Vec::with_capacity(ds.len());
    let mut raw_targets = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let window = zscore_apply(&ds.inputs[i][channel], norm)?;
        let sg = cwt(&window, wavelet)?;
        let mut data = Vec::with_capacity(n_scales * len);
        for s in 0..n_scales {
            data.extend_from_slice(&sg.magnitudes[s]);
        }
        inputs.push(Tensor::from_vec(&[n_scales, len, 1], data)?);
        let t = ds.targets[i][channel];
        targets.push(alloc::vec![(t - norm.mean) / norm.std]);
        raw_targets.push(alloc::vec![t]);
    }
    Ok(FeatureSet {
        inputs,
        targets,
        raw_targets,
        input_shape: (n_scales, len, 1),
    })
}

/// Dual-channel images per `mode`, with both channels' next samples as the
/// two targets.
pub fn coherence_features(
    ds: &WindowedDataset,
    norm: &[NormStats],
    wavelet: &WaveletParams,
    smoothing: &SmoothingParams,
    mode: InputMode,
) -> CoreResult<FeatureSet> {
    if ds.n_channels != 2 {
        return Err(CoreError::SingleChannelData);
    }
    if mode == InputMode::ScalogramSingle {
        return Err(CoreError::ConfigError(
            "dual-channel features need a coherence input mode".into(),
        ));
    }
    wavelet.validate()?;
    smoothing.validate()?;
    let len = ds.config.window_len;
    let n_scales = wavelet.n_scales;
    let n_channels = mode.channels();

    let mut inputs = Vec::with_capacity(ds.len());
    let mut targets = Vec::with_capacity(ds.len());
    let mut raw_targets = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let w0 = zscore_apply(&ds.inputs[i][0], &norm[0])?;
        let w1 = zscore_apply(&ds.inputs[i][1], &norm[1])?;
        let sg0 = cwt(&w0, wavelet)?;
        let sg1 = cwt(&w1, wavelet)?;
        let coh = wcoh_from_scalograms(&sg0, &sg1, smoothing, CoherenceForm::MagnitudeSquared)?;

        let mut data = Vec::with_capacity(n_scales * len * n_channels);
        for s in 0..n_scales {
            for t in 0..len {
                match mode {
                    InputMode::CoherenceOnly => data.push(coh.values[s][t]),
                    InputMode::CoherencePlusScalograms => {
                        data.push(sg0.magnitudes[s][t]);
                        data.push(sg1.magnitudes[s][t]);
                        data.push(coh.values[s][t]);
                    }
                    InputMode::ScalogramSingle => unreachable!("rejected above"),
                }
            }
        }
        inputs.push(Tensor::from_vec(&[n_scales, len, n_channels], data)?);
        let (t0, t1) = (ds.targets[i][0], ds.targets[i][1]);
        targets.push(alloc::vec![
            (t0 - norm[0].mean) / norm[0].std,
            (t1 - norm[1].mean) / norm[1].std,
        ]);
        raw_targets.push(alloc::vec![t0, t1]);
    }
    Ok(FeatureSet {
        inputs,
        targets,
        raw_targets,
        input_shape: (n_scales, len, n_channels),
    })
}

fn check_channel(ds: &WindowedDataset, channel: usize) -> CoreResult<()> {
    if channel >= ds.n_channels {
        return Err(CoreError::ConfigError(alloc::format!(
            "channel {channel} out of range for {}-channel data",
            ds.n_channels
        )));
    }
    Ok(())
}
