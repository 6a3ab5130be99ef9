//! Seedable dual-channel synthetic signals for the three coupling regimes
//! used in benchmarks.
//!
//! - `Coupled`: both channels share a band-limited stochastic oscillator,
//!   mixed against independent AR(2) noise so the empirical correlation hits
//!   a target.
//! - `Nonlinear`: channel 2 is the quadrature (90-degree phase) component of
//!   channel 1's oscillator, so linear correlation is near zero while
//!   in-band wavelet coherence stays high.
//! - `Independent`: two unrelated AR(2) noise channels.
//!
//! AR(2) processes with complex poles give an LFP-like band-limited spectrum
//! without modeling any biophysics. All frequencies are normalized
//! (cycles/sample), keeping the generator sample-rate agnostic.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, CoreResult};
use crate::math;
use crate::signal::TimeSeries;

const BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Coupled,
    Nonlinear,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeConfig {
    pub regime: Regime,
    pub n_samples: usize,
    pub seed: u64,
    /// Target Pearson correlation between the channels (`Coupled` only).
    pub target_corr: f64,
    /// Normalized frequency band of the shared rhythm, cycles/sample.
    pub band: (f64, f64),
    /// White measurement noise mixed into each channel before standardizing.
    pub noise_level: f64,
}

impl RegimeConfig {
    pub fn new(regime: Regime, n_samples: usize, seed: u64) -> Self {
        Self {
            regime,
            n_samples,
            seed,
            target_corr: 0.40,
            band: (0.05, 0.10),
            noise_level: 0.05,
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        if self.n_samples < 500 {
            return Err(CoreError::ConfigError(format!(
                "n_samples must be >= 500, got {}",
                self.n_samples
            )));
        }
        if !(self.target_corr.abs() < 1.0) {
            return Err(CoreError::ConfigError(format!(
                "target_corr must lie in (-1, 1), got {}",
                self.target_corr
            )));
        }
        let (lo, hi) = self.band;
        if !(0.0 < lo && lo < hi && hi < 0.5) {
            return Err(CoreError::ConfigError(format!(
                "band must satisfy 0 < lo < hi < 0.5, got ({lo}, {hi})"
            )));
        }
        if !(self.noise_level > 0.0) {
            return Err(CoreError::ConfigError(
                "noise_level must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mixing weight for the shared component such that two channels built as
/// `w * shared + sqrt(1 - w^2) * private` (unit-variance parts) correlate at
/// `w^2 = |target|`; the sign is applied to channel 2's shared term.
pub fn calibrate_mixing(target_corr: f64) -> f64 {
    math::sqrt(math::abs(target_corr))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}

/// AR(2) coefficients for complex poles at radius `r` and normalized
/// frequency `freq`.
fn ar2_coeffs(r: f64, freq: f64) -> (f64, f64) {
    let theta = 2.0 * core::f64::consts::PI * freq;
    (2.0 * r * math::cos(theta), -r * r)
}

/// Pole radius for a resonance whose half-power width matches the band.
fn band_radius(band: (f64, f64)) -> f64 {
    (1.0 - core::f64::consts::PI * (band.1 - band.0)).clamp(0.5, 0.999)
}

fn ar2_series(rng: &mut ChaCha8Rng, n: usize, r: f64, freq: f64) -> Vec<f64> {
    let (a1, a2) = ar2_coeffs(r, freq);
    let mut y = Vec::with_capacity(n + BURN_IN);
    y.push(normal(rng));
    y.push(normal(rng));
    for t in 2..n + BURN_IN {
        y.push(a1 * y[t - 1] + a2 * y[t - 2] + normal(rng));
    }
    y.split_off(BURN_IN)
}

/// Band-limited process shaped by the config band.
fn band_series(rng: &mut ChaCha8Rng, n: usize, band: (f64, f64)) -> Vec<f64> {
    ar2_series(rng, n, band_radius(band), 0.5 * (band.0 + band.1))
}

/// Weakly structured AR(2) noise: short memory, resonance well above the
/// shared band. Keeping the private spectra distinct from the shared
/// oscillator is what lets the partner channel's past help separate the
/// shared state (a purely contemporaneous mixture would leave a vector
/// model with nothing to exploit).
fn private_series(rng: &mut ChaCha8Rng, n: usize, band: (f64, f64)) -> Vec<f64> {
    let freq = (3.0 * band.1).min(0.45);
    ar2_series(rng, n, 0.3, freq)
}

/// Complex stochastic oscillator `z_t = r e^{i theta} z_{t-1} + eps_t` with
/// circular complex white noise; returns (Re z, Im z).
fn quadrature_pair(rng: &mut ChaCha8Rng, n: usize, band: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let center = 0.5 * (band.0 + band.1);
    let r = (1.0 - core::f64::consts::PI * (band.1 - band.0)).clamp(0.5, 0.999);
    let theta = 2.0 * core::f64::consts::PI * center;
    let (c, s) = (math::cos(theta), math::sin(theta));
    let mut re = Vec::with_capacity(n + BURN_IN);
    let mut im = Vec::with_capacity(n + BURN_IN);
    let (mut zr, mut zi) = (0.0, 0.0);
    for _ in 0..n + BURN_IN {
        let (er, ei) = (normal(rng), normal(rng));
        let nr = r * (c * zr - s * zi) + er;
        let ni = r * (s * zr + c * zi) + ei;
        zr = nr;
        zi = ni;
        re.push(zr);
        im.push(zi);
    }
    (re.split_off(BURN_IN), im.split_off(BURN_IN))
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = math::sqrt(var).max(1e-12);
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

fn noisy_standardized(rng: &mut ChaCha8Rng, mut base: Vec<f64>, noise_level: f64) -> Vec<f64> {
    for v in base.iter_mut() {
        *v += noise_level * normal(rng);
    }
    standardize(&mut base);
    base
}

/// Generates the two channels for a regime. Same config, same output,
/// bit for bit.
pub fn generate(cfg: &RegimeConfig) -> CoreResult<(TimeSeries, TimeSeries)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_samples;

    let (ch1, ch2) = match cfg.regime {
        Regime::Independent => {
            let base_a = band_series(&mut rng, n, cfg.band);
            let a = noisy_standardized(&mut rng, base_a, cfg.noise_level);
            let base_b = band_series(&mut rng, n, cfg.band);
            let b = noisy_standardized(&mut rng, base_b, cfg.noise_level);
            (a, b)
        }
        Regime::Coupled => {
            let mut shared = band_series(&mut rng, n, cfg.band);
            standardize(&mut shared);
            let base_1 = private_series(&mut rng, n, cfg.band);
            let p1 = noisy_standardized(&mut rng, base_1, cfg.noise_level);
            let base_2 = private_series(&mut rng, n, cfg.band);
            let p2 = noisy_standardized(&mut rng, base_2, cfg.noise_level);
            let w = calibrate_mixing(cfg.target_corr);
            let sign = if cfg.target_corr < 0.0 { -1.0 } else { 1.0 };
            let private_w = math::sqrt(1.0 - w * w);
            let ch1 = shared
                .iter()
                .zip(&p1)
                .map(|(s, p)| w * s + private_w * p)
                .collect();
            let ch2 = shared
                .iter()
                .zip(&p2)
                .map(|(s, p)| sign * w * s + private_w * p)
                .collect();
            (ch1, ch2)
        }
        Regime::Nonlinear => {
            let (re, im) = quadrature_pair(&mut rng, n, cfg.band);
            let a = noisy_standardized(&mut rng, re, cfg.noise_level);
            let b = noisy_standardized(&mut rng, im, cfg.noise_level);
            (a, b)
        }
    };

    Ok((
        TimeSeries::new(ch1, 1.0, "HIP")?,
        TimeSeries::new(ch2, 1.0, "NAc")?,
    ))
}
