//! Morlet continuous wavelet transform of windowed segments.
//!
//! Windows here are short (a dozen samples), so the transform is computed by
//! direct time-domain summation rather than FFT convolution: O(scales * L^2)
//! is trivially fast at these sizes and avoids circular-padding artifacts.
//! Samples outside the window are treated as zero, with no cone-of-influence
//! masking; the maps feed a learned model that can discount edges itself.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{CoreError, CoreResult};
use crate::math;

/// Morlet parameterization and the scale grid extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletParams {
    /// Morlet center frequency (dimensionless). Values >= 5 keep the
    /// zero-mean admissibility approximation valid.
    pub omega0: f64,
    pub n_scales: usize,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl WaveletParams {
    /// Default grid: 16 geometric scales whose pseudo-periods span
    /// [2, window_len] samples.
    pub fn for_window(window_len: usize) -> Self {
        let omega0 = 6.0;
        Self {
            omega0,
            n_scales: 16,
            scale_min: scale_for_period(2.0, omega0),
            scale_max: scale_for_period(window_len as f64, omega0),
        }
    }

    pub fn validate(&self) -> CoreResult<()> {
        if !(self.omega0 >= 5.0) {
            return Err(CoreError::ConfigError(format!(
                "omega0 must be >= 5 for admissibility, got {}",
                self.omega0
            )));
        }
        if self.n_scales < 2 {
            return Err(CoreError::ConfigError(format!(
                "n_scales must be >= 2, got {}",
                self.n_scales
            )));
        }
        if !(self.scale_min > 0.0 && self.scale_min < self.scale_max) {
            return Err(CoreError::ConfigError(format!(
                "scale range must satisfy 0 < min < max, got [{}, {}]",
                self.scale_min, self.scale_max
            )));
        }
        Ok(())
    }

    /// Geometrically spaced scales from `scale_min` to `scale_max`.
    pub fn scale_grid(&self) -> Vec<f64> {
        let n = self.n_scales;
        let ratio = math::ln(self.scale_max / self.scale_min) / (n - 1) as f64;
        (0..n)
            .map(|i| self.scale_min * math::exp(ratio * i as f64))
            .collect()
    }
}

impl Default for WaveletParams {
    fn default() -> Self {
        Self::for_window(12)
    }
}

/// Pseudo-period (in samples) of the Morlet wavelet at scale `a`.
pub fn period_for_scale(a: f64, omega0: f64) -> f64 {
    4.0 * core::f64::consts::PI * a / (omega0 + math::sqrt(2.0 + omega0 * omega0))
}

/// Inverse of [`period_for_scale`].
pub fn scale_for_period(period: f64, omega0: f64) -> f64 {
    period * (omega0 + math::sqrt(2.0 + omega0 * omega0)) / (4.0 * core::f64::consts::PI)
}

/// Geometric scale grid whose pseudo-periods span [2, window_len] samples.
pub fn default_scale_grid(window_len: usize, n_scales: usize) -> Vec<f64> {
    let mut p = WaveletParams::for_window(window_len);
    p.n_scales = n_scales;
    p.scale_grid()
}

/// Complex Morlet mother wavelet sample:
/// `pi^(-1/4) * exp(i*omega0*t) * exp(-t^2/2)`.
pub fn morlet_sample(t: f64, params: &WaveletParams) -> Complex64 {
    let envelope = math::powf(core::f64::consts::PI, -0.25) * math::exp(-0.5 * t * t);
    Complex64::new(
        envelope * math::cos(params.omega0 * t),
        envelope * math::sin(params.omega0 * t),
    )
}

/// Scales-by-time transform of one window, with the complex coefficients
/// retained so coherence can reuse them without recomputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    /// `magnitudes[s][t] = |complex_coeffs[s][t]|`, all finite.
    pub magnitudes: Vec<Vec<f64>>,
    pub complex_coeffs: Vec<Vec<Complex64>>,
    pub scales: Vec<f64>,
}

impl Scalogram {
    pub fn n_scales(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn window_len(&self) -> usize {
        self.magnitudes.first().map_or(0, Vec::len)
    }
}

/// Continuous wavelet transform of a window by direct summation:
/// `W(a, b) = a^(-1/2) * sum_t x[t] * conj(psi((t - b)/a))`
/// with unit sample spacing and zero-padded evaluation outside the window.
pub fn cwt(window: &[f64], params: &WaveletParams) -> CoreResult<Scalogram> {
    params.validate()?;
    if window.len() < 2 {
        return Err(CoreError::SeriesTooShort {
            len: window.len(),
            need: 2,
        });
    }
    if let Some(index) = window.iter().position(|v| !v.is_finite()) {
        return Err(CoreError::NonFiniteInput { index });
    }

    let scales = params.scale_grid();
    let len = window.len();
    let mut complex_coeffs = Vec::with_capacity(scales.len());
    let mut magnitudes = Vec::with_capacity(scales.len());
    for &a in &scales {
        let norm = 1.0 / math::sqrt(a);
        let mut row = Vec::with_capacity(len);
        let mut mag_row = Vec::with_capacity(len);
        for b in 0..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &x) in window.iter().enumerate() {
                let u = (t as f64 - b as f64) / a;
                acc += x * morlet_sample(u, params).conj();
            }
            let w = acc * norm;
            row.push(w);
            mag_row.push(math::hypot(w.re, w.im));
        }
        complex_coeffs.push(row);
        magnitudes.push(mag_row);
    }

    Ok(Scalogram {
        magnitudes,
        complex_coeffs,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const PI: f64 = core::f64::consts::PI;

    #[test]
    fn morlet_at_zero_is_quarter_root_pi() {
        let p = WaveletParams::default();
        let v = morlet_sample(0.0, &p);
        assert!((v.re - PI.powf(-0.25)).abs() < 1e-12);
        assert!((v.re - 0.7511).abs() < 1e-4);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn morlet_envelope_is_symmetric() {
        let p = WaveletParams::default();
        for i in 0..50 {
            let t = -5.0 + 0.2 * i as f64;
            let a = morlet_sample(t, &p).norm();
            let b = morlet_sample(-t, &p).norm();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn morlet_has_unit_energy() {
        // Trapezoid-rule quadrature of |psi|^2 over [-8, 8].
        let p = WaveletParams::default();
        let h = 0.001;
        let n = (16.0 / h) as usize;
        let f = |t: f64| morlet_sample(t, &p).norm_sqr();
        let mut acc = 0.5 * (f(-8.0) + f(8.0));
        for i in 1..n {
            acc += f(-8.0 + h * i as f64);
        }
        let integral = acc * h;
        assert!((integral - 1.0).abs() < 1e-6, "energy {integral}");
    }

    #[test]
    fn scale_grid_endpoints_and_geometry() {
        let grid = default_scale_grid(12, 2);
        assert_eq!(grid.len(), 2);
        let omega0 = 6.0;
        assert!((period_for_scale(grid[0], omega0) - 2.0).abs() < 1e-9);
        assert!((period_for_scale(grid[1], omega0) - 12.0).abs() < 1e-9);

        let grid = default_scale_grid(12, 16);
        let ratio = grid[1] / grid[0];
        for pair in grid.windows(2) {
            assert!((pair[1] / pair[0] - ratio).abs() < 1e-10);
        }
    }

    #[test]
    fn scale_for_period_two_matches_closed_form() {
        // period = 4*pi*a / (omega0 + sqrt(2 + omega0^2)) inverted at period 2.
        let expected = 2.0 * (6.0 + 38.0f64.sqrt()) / (4.0 * PI);
        assert!((scale_for_period(2.0, 6.0) - expected).abs() < 1e-12);
        assert!((expected - 1.936).abs() < 1e-3);
    }

    #[test]
    fn zero_window_gives_zero_scalogram() {
        let sg = cwt(&[0.0; 12], &WaveletParams::default()).unwrap();
        for row in &sg.magnitudes {
            assert!(row.iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn cwt_scales_linearly() {
        let p = WaveletParams::default();
        let window: Vec<f64> = (0..12).map(|i| (0.7 * i as f64).sin()).collect();
        let scaled: Vec<f64> = window.iter().map(|v| 3.5 * v).collect();
        let a = cwt(&window, &p).unwrap();
        let b = cwt(&scaled, &p).unwrap();
        for (ra, rb) in a.magnitudes.iter().zip(&b.magnitudes) {
            for (ma, mb) in ra.iter().zip(rb) {
                assert!((mb - 3.5 * ma).abs() < 1e-10 * (1.0 + ma.abs()));
            }
        }
    }

    // Independent brute-force oracle: builds the scaled wavelet vector per
    // (scale, shift) and takes an explicit dot product.
    fn cwt_oracle(window: &[f64], scales: &[f64], omega0: f64) -> Vec<Vec<Complex64>> {
        let mut out = Vec::new();
        for &a in scales {
            let mut row = Vec::new();
            for b in 0..window.len() {
                let mut re = 0.0;
                let mut im = 0.0;
                for (t, &x) in window.iter().enumerate() {
                    let u = (t as f64 - b as f64) / a;
                    let env = PI.powf(-0.25) * (-0.5 * u * u).exp();
                    // conj(psi(u)) = env * (cos(w0 u) - i sin(w0 u))
                    re += x * env * (omega0 * u).cos();
                    im -= x * env * (omega0 * u).sin();
                }
                row.push(Complex64::new(re, im) / a.sqrt());
            }
            out.push(row);
        }
        out
    }

    #[test]
    fn cwt_matches_direct_summation_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let p = WaveletParams::default();
        for _ in 0..25 {
            let window: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
            let sg = cwt(&window, &p).unwrap();
            let oracle = cwt_oracle(&window, &sg.scales, p.omega0);
            for (rp, ro) in sg.complex_coeffs.iter().zip(&oracle) {
                for (cp, co) in rp.iter().zip(ro) {
                    assert!((cp - co).norm() < 1e-10);
                }
            }
        }
    }

    fn argmax_scale(sg: &Scalogram) -> usize {
        let mut best = (0usize, -1.0f64);
        for (s, row) in sg.magnitudes.iter().enumerate() {
            for &m in row {
                if m > best.1 {
                    best = (s, m);
                }
            }
        }
        best.0
    }

    fn nearest_to_period(scales: &[f64], period: f64) -> usize {
        scales
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let da = (period_for_scale(**a, 6.0) - period).abs();
                let db = (period_for_scale(**b, 6.0) - period).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap()
    }

    #[test]
    fn cosine_ridge_localizes_at_period_six() {
        let window: Vec<f64> = (0..12).map(|i| (2.0 * PI * i as f64 / 6.0).cos()).collect();

        // On the default grid the argmax row is the scale nearest period 6.
        let sg = cwt(&window, &WaveletParams::default()).unwrap();
        assert_eq!(argmax_scale(&sg), nearest_to_period(&sg.scales, 6.0));

        // Fine-resolution check: the ridge period stays within 10% of 6
        // (zero padding biases the peak slightly toward smaller scales).
        let fine = WaveletParams {
            omega0: 6.0,
            n_scales: 128,
            scale_min: scale_for_period(2.0, 6.0),
            scale_max: scale_for_period(12.0, 6.0),
        };
        let sg = cwt(&window, &fine).unwrap();
        let ridge_period = period_for_scale(sg.scales[argmax_scale(&sg)], 6.0);
        assert!(
            (ridge_period - 6.0).abs() / 6.0 < 0.10,
            "ridge period {ridge_period}"
        );
    }

    #[test]
    fn shift_covariance_on_padded_input() {
        // Content confined to the middle of a long window; shifting it by k
        // shifts the coefficient columns by k exactly (zero padding makes
        // both sums identical term by term).
        let p = WaveletParams::for_window(16);
        let len = 48;
        let k = 6;
        let mut base = vec![0.0; len];
        for (i, slot) in base.iter_mut().enumerate().take(24).skip(16) {
            *slot = ((i - 16) as f64 * 0.9).sin() + 0.3;
        }
        let mut shifted = vec![0.0; len];
        for i in 0..len - k {
            shifted[i + k] = base[i];
        }
        let a = cwt(&base, &p).unwrap();
        let b = cwt(&shifted, &p).unwrap();
        for s in 0..a.n_scales() {
            for col in k..len {
                let d = (b.complex_coeffs[s][col] - a.complex_coeffs[s][col - k]).norm();
                assert!(d < 1e-8, "scale {s} col {col}: {d}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linearity_in_complex_coefficients(
            x in proptest::collection::vec(-3.0f64..3.0, 12),
            y in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let p = WaveletParams::default();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let wx = cwt(&x, &p).unwrap();
            let wy = cwt(&y, &p).unwrap();
            let ws = cwt(&sum, &p).unwrap();
            for s in 0..wx.n_scales() {
                for t in 0..12 {
                    let lhs = ws.complex_coeffs[s][t];
                    let rhs = wx.complex_coeffs[s][t] + wy.complex_coeffs[s][t];
                    prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
                }
            }
        }

        #[test]
        fn magnitudes_invariant_under_sign_flip(
            x in proptest::collection::vec(-3.0f64..3.0, 12),
        ) {
            let p = WaveletParams::default();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let a = cwt(&x, &p).unwrap();
            let b = cwt(&neg, &p).unwrap();
            for (ra, rb) in a.magnitudes.iter().zip(&b.magnitudes) {
                for (ma, mb) in ra.iter().zip(rb) {
                    prop_assert!((ma - mb).abs() < 1e-12);
                }
            }
            // Magnitude/coefficient consistency.
            for (ra, rc) in a.magnitudes.iter().zip(&a.complex_coeffs) {
                for (m, c) in ra.iter().zip(rc) {
                    prop_assert!((m - c.norm()).abs() < 1e-12);
                }
            }
        }
    }
}
