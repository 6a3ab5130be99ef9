//! Wavelet coherence between two channels.
//!
//! Coherence is the magnitude-squared, smoothed, normalized cross-wavelet
//! spectrum: `|S[Wx Wy*]|^2 / (S[|Wx|^2] S[|Wy|^2])`, bounded in [0, 1] by
//! Cauchy-Schwarz. Without smoothing the ratio is identically 1, so the
//! smoothing operator is what makes the measure informative: a unit-sum
//! Gaussian along time (width proportional to scale) followed by a unit-sum
//! boxcar across scale indices, both with symmetric-reflection padding.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{CoreError, CoreResult};
use crate::math;
use crate::wavelet::{cwt, Scalogram, WaveletParams};

/// Smoothing operator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    /// Gaussian time-smoothing width as a multiple of each row's scale.
    pub time_sigma_factor: f64,
    /// Odd width of the boxcar filter across scale indices.
    pub scale_boxcar: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            time_sigma_factor: 0.6,
            scale_boxcar: 3,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> CoreResult<()> {
        if !(self.time_sigma_factor > 0.0) || !self.time_sigma_factor.is_finite() {
            return Err(CoreError::ConfigError(format!(
                "time_sigma_factor must be positive, got {}",
                self.time_sigma_factor
            )));
        }
        if self.scale_boxcar == 0 || self.scale_boxcar % 2 == 0 {
            return Err(CoreError::ConfigError(format!(
                "scale_boxcar must be odd and >= 1, got {}",
                self.scale_boxcar
            )));
        }
        Ok(())
    }
}

/// Numerator convention for the coherence ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoherenceForm {
    /// `|S[Wx Wy*]|^2` — the standard form, bounded in [0, 1]. Default.
    MagnitudeSquared,
    /// `|S[Wx Wy*]|` without the square. Kept for comparison; the resulting
    /// quantity is not bounded by 1 and is not clamped.
    UnsquaredMagnitude,
}

/// Scales-by-time coherence grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMap {
    /// Values in [0, 1] (for the default form).
    pub values: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
    /// Cells whose smoothed denominator fell below 1e-30 and were set to 0.
    pub degenerate_cells: usize,
}

impl CoherenceMap {
    pub fn n_scales(&self) -> usize {
        self.values.len()
    }

    pub fn window_len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Scalar per-window summary: mean over all cells.
    pub fn mean(&self) -> f64 {
        let cells: usize = self.values.iter().map(Vec::len).sum();
        if cells == 0 {
            return 0.0;
        }
        self.values.iter().flatten().sum::<f64>() / cells as f64
    }

    /// Mean over rows whose pseudo-period lies in `[period_lo, period_hi]`.
    pub fn band_mean(&self, omega0: f64, period_lo: f64, period_hi: f64) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for (row, &a) in self.values.iter().zip(&self.scales) {
            let period = crate::wavelet::period_for_scale(a, omega0);
            if period >= period_lo && period <= period_hi {
                acc += row.iter().sum::<f64>();
                n += row.len();
            }
        }
        if n == 0 {
            0.0
        } else {
            acc / n as f64
        }
    }
}

/// Elementwise `Wx * conj(Wy)`.
pub fn cross_wavelet(
    wx: &[Vec<Complex64>],
    wy: &[Vec<Complex64>],
) -> CoreResult<Vec<Vec<Complex64>>> {
    check_same_shape(wx, wy, "cross_wavelet")?;
    Ok(wx
        .iter()
        .zip(wy)
        .map(|(rx, ry)| rx.iter().zip(ry).map(|(a, b)| a * b.conj()).collect())
        .collect())
}

fn check_same_shape<T, U>(a: &[Vec<T>], b: &[Vec<U>], op: &'static str) -> CoreResult<()> {
    if a.len() != b.len() || a.iter().zip(b).any(|(ra, rb)| ra.len() != rb.len()) {
        return Err(CoreError::ShapeMismatch {
            op,
            detail: format!("{}x? vs {}x? grids", a.len(), b.len()),
        });
    }
    Ok(())
}

/// Maps an out-of-range index into [0, n) by symmetric (half-sample)
/// reflection, handling multiple bounces.
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i % period;
    if m < 0 {
        m += period;
    }
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Unit-sum Gaussian kernel sampled at integer offsets, radius 4 sigma.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for i in 0..=2 * radius {
        let d = i as f64 - radius as f64;
        kernel.push(math::exp(-0.5 * d * d / (sigma * sigma)));
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

fn convolve_row_reflect(row: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = row.len();
    let radius = kernel.len() / 2;
    (0..n)
        .map(|b| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, &w)| w * row[reflect(b as isize + k as isize - radius as isize, n)])
                .sum()
        })
        .collect()
}

/// Smooths a real grid: per-row Gaussian in time with sigma proportional to
/// that row's scale, then a boxcar across scale indices.
pub fn smooth_real(
    grid: &[Vec<f64>],
    scales: &[f64],
    params: &SmoothingParams,
) -> CoreResult<Vec<Vec<f64>>> {
    params.validate()?;
    if grid.len() != scales.len() {
        return Err(CoreError::ShapeMismatch {
            op: "smooth",
            detail: format!("{} rows vs {} scales", grid.len(), scales.len()),
        });
    }
    if grid.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite { op: "smooth" });
    }

    // Time axis.
    let mut out: Vec<Vec<f64>> = grid
        .iter()
        .zip(scales)
        .map(|(row, &a)| convolve_row_reflect(row, &gaussian_kernel(params.time_sigma_factor * a)))
        .collect();

    // Scale axis.
    if params.scale_boxcar > 1 {
        let w = params.scale_boxcar;
        let radius = (w / 2) as isize;
        let n_rows = out.len();
        let n_cols = out.first().map_or(0, Vec::len);
        let mut smoothed = alloc::vec![alloc::vec![0.0; n_cols]; n_rows];
        for (s, row_out) in smoothed.iter_mut().enumerate() {
            for (t, cell) in row_out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for d in -radius..=radius {
                    acc += out[reflect(s as isize + d, n_rows)][t];
                }
                *cell = acc / w as f64;
            }
        }
        out = smoothed;
    }
    Ok(out)
}

/// Complex-grid smoothing: the operator is linear, so real and imaginary
/// parts are smoothed independently.
pub fn smooth_complex(
    grid: &[Vec<Complex64>],
    scales: &[f64],
    params: &SmoothingParams,
) -> CoreResult<Vec<Vec<Complex64>>> {
    let re: Vec<Vec<f64>> = grid
        .iter()
        .map(|r| r.iter().map(|c| c.re).collect())
        .collect();
    let im: Vec<Vec<f64>> = grid
        .iter()
        .map(|r| r.iter().map(|c| c.im).collect())
        .collect();
    let sre = smooth_real(&re, scales, params)?;
    let sim = smooth_real(&im, scales, params)?;
    Ok(sre
        .iter()
        .zip(&sim)
        .map(|(rr, ri)| {
            rr.iter()
                .zip(ri)
                .map(|(&a, &b)| Complex64::new(a, b))
                .collect()
        })
        .collect())
}

/// Wavelet coherence of two equal-length windows.
pub fn wcoh(
    x_window: &[f64],
    y_window: &[f64],
    wavelet_params: &WaveletParams,
    smoothing: &SmoothingParams,
) -> CoreResult<CoherenceMap> {
    if x_window.len() != y_window.len() {
        return Err(CoreError::LengthMismatch {
            left: x_window.len(),
            right: y_window.len(),
        });
    }
    if x_window.iter().all(|&v| v == 0.0) {
        return Err(CoreError::DegenerateWindow { channel: 0 });
    }
    if y_window.iter().all(|&v| v == 0.0) {
        return Err(CoreError::DegenerateWindow { channel: 1 });
    }
    let wx = cwt(x_window, wavelet_params)?;
    let wy = cwt(y_window, wavelet_params)?;
    wcoh_from_scalograms(&wx, &wy, smoothing, CoherenceForm::MagnitudeSquared)
}

/// Coherence from already-computed transforms; `form` selects the numerator
/// convention.
pub fn wcoh_from_scalograms(
    wx: &Scalogram,
    wy: &Scalogram,
    smoothing: &SmoothingParams,
    form: CoherenceForm,
) -> CoreResult<CoherenceMap> {
    check_same_shape(&wx.complex_coeffs, &wy.complex_coeffs, "wcoh")?;
    if wx.scales != wy.scales {
        return Err(CoreError::ShapeMismatch {
            op: "wcoh",
            detail: "scale grids differ".into(),
        });
    }
    let cross = cross_wavelet(&wx.complex_coeffs, &wy.complex_coeffs)?;
    let sxy = smooth_complex(&cross, &wx.scales, smoothing)?;
    let pxx: Vec<Vec<f64>> = wx
        .complex_coeffs
        .iter()
        .map(|r| r.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let pyy: Vec<Vec<f64>> = wy
        .complex_coeffs
        .iter()
        .map(|r| r.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let sxx = smooth_real(&pxx, &wx.scales, smoothing)?;
    let syy = smooth_real(&pyy, &wx.scales, smoothing)?;

    coherence_ratio(&sxy, &sxx, &syy, &wx.scales, form)
}

/// Diagnostic variant with the identity smoother. The ratio degenerates to 1
/// at every non-degenerate cell; kept so tests can verify that the default
/// path genuinely smooths.
pub fn wcoh_unsmoothed(
    x_window: &[f64],
    y_window: &[f64],
    wavelet_params: &WaveletParams,
) -> CoreResult<CoherenceMap> {
    let wx = cwt(x_window, wavelet_params)?;
    let wy = cwt(y_window, wavelet_params)?;
    let sxy = cross_wavelet(&wx.complex_coeffs, &wy.complex_coeffs)?;
    let sxx: Vec<Vec<f64>> = wx
        .complex_coeffs
        .iter()
        .map(|r| r.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    let syy: Vec<Vec<f64>> = wy
        .complex_coeffs
        .iter()
        .map(|r| r.iter().map(|c| c.norm_sqr()).collect())
        .collect();
    coherence_ratio(&sxy, &sxx, &syy, &wx.scales, CoherenceForm::MagnitudeSquared)
}

fn coherence_ratio(
    sxy: &[Vec<Complex64>],
    sxx: &[Vec<f64>],
    syy: &[Vec<f64>],
    scales: &[f64],
    form: CoherenceForm,
) -> CoreResult<CoherenceMap> {
    let mut degenerate_cells = 0usize;
    let mut values = Vec::with_capacity(sxy.len());
    for s in 0..sxy.len() {
        let mut row = Vec::with_capacity(sxy[s].len());
        for t in 0..sxy[s].len() {
            let denom = sxx[s][t] * syy[s][t];
            let v = if denom < 1e-30 {
                degenerate_cells += 1;
                0.0
            } else {
                match form {
                    CoherenceForm::MagnitudeSquared => {
                        (sxy[s][t].norm_sqr() / denom).clamp(0.0, 1.0)
                    }
                    CoherenceForm::UnsquaredMagnitude => {
                        math::sqrt(sxy[s][t].norm_sqr()) / denom
                    }
                }
            };
            if !v.is_finite() {
                return Err(CoreError::NonFinite { op: "wcoh" });
            }
            row.push(v);
        }
        values.push(row);
    }
    Ok(CoherenceMap {
        values,
        scales: scales.to_vec(),
        degenerate_cells,
    })
}
