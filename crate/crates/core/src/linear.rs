//! Linear baselines: univariate AR and bivariate VAR, estimated by ordinary
//! least squares on the lagged design matrix, with AIC/BIC order selection.
//!
//! Estimation goes through a Householder QR factorization rather than the
//! normal equations, and both channels of a VAR share one factorization.
//! Order selection compares every candidate on the common effective sample
//! (rows valid at `p_max`) so criterion values are comparable across orders.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math;

/// Fitted autoregression of order `p`:
/// `y_t = intercept + sum_k coeffs[k-1] * y_{t-k} + e_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub order: usize,
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    /// Residual mean square of the fit.
    pub noise_variance: f64,
}

/// Fitted two-channel vector autoregression of order `p`.
///
/// `coeff_mats[k-1][i][j]` maps channel `j` at lag `k` into channel `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub order: usize,
    pub intercepts: [f64; 2],
    pub coeff_mats: Vec<[[f64; 2]; 2]>,
    /// Residual covariance (symmetric PSD up to rounding).
    pub resid_cov: [[f64; 2]; 2],
}

/// Information criterion used by [`select_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Aic,
    Bic,
}

/// Outcome of order selection: the winner plus the criterion trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub order: usize,
    /// `(candidate p, criterion value)` for every candidate.
    pub values: Vec<(usize, f64)>,
}

// ---------------------------------------------------------------------------
// Least squares via Householder QR.

struct Design {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

impl Design {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

struct OlsFit {
    /// One coefficient vector per right-hand side.
    coeffs: Vec<Vec<f64>>,
    /// Residual vectors, same order.
    residuals: Vec<Vec<f64>>,
}

/// Solves `min ||X b - y||` for each right-hand side with one Householder QR
/// factorization of `X`. Rank deficiency is flagged, not "solved".
fn ols_solve(x: &Design, targets: &[&[f64]]) -> CoreResult<OlsFit> {
    let (n, k) = (x.rows, x.cols);
    if n < k + 1 {
        return Err(CoreError::SingularDesign {
            detail: format!("{n} rows for {k} columns"),
        });
    }
    let mut a = x.data.clone();
    let mut ys: Vec<Vec<f64>> = targets.iter().map(|t| t.to_vec()).collect();

    let mut max_diag = 0.0f64;
    for j in 0..k {
        // Householder vector for column j below the diagonal.
        let mut norm = 0.0;
        for r in j..n {
            let v = a[r * k + j];
            norm += v * v;
        }
        let norm = math::sqrt(norm);
        let pivot = a[j * k + j];
        let alpha = if pivot >= 0.0 { -norm } else { norm };
        max_diag = max_diag.max(math::abs(alpha));

        let tol = f64::EPSILON * (n.max(k) as f64) * max_diag;
        if math::abs(alpha) <= tol {
            return Err(CoreError::SingularDesign {
                detail: format!("rank-deficient at column {j}"),
            });
        }

        let mut v = vec![0.0; n - j];
        v[0] = pivot - alpha;
        for r in j + 1..n {
            v[r - j] = a[r * k + j];
        }
        let vtv: f64 = v.iter().map(|u| u * u).sum();
        if vtv > 0.0 {
            let beta = 2.0 / vtv;
            for c in j..k {
                let mut dot = 0.0;
                for r in j..n {
                    dot += v[r - j] * a[r * k + c];
                }
                let s = beta * dot;
                for r in j..n {
                    a[r * k + c] -= s * v[r - j];
                }
            }
            for y in &mut ys {
                let mut dot = 0.0;
                for r in j..n {
                    dot += v[r - j] * y[r];
                }
                let s = beta * dot;
                for r in j..n {
                    y[r] -= s * v[r - j];
                }
            }
        }
        a[j * k + j] = alpha;
    }

    let mut coeffs = Vec::with_capacity(ys.len());
    for y in &ys {
        let mut b = vec![0.0; k];
        for j in (0..k).rev() {
            let mut acc = y[j];
            for c in j + 1..k {
                acc -= a[j * k + c] * b[c];
            }
            b[j] = acc / a[j * k + j];
        }
        coeffs.push(b);
    }

    let residuals = coeffs
        .iter()
        .zip(targets)
        .map(|(b, y)| {
            (0..n)
                .map(|r| {
                    let mut pred = 0.0;
                    for c in 0..k {
                        pred += x.at(r, c) * b[c];
                    }
                    y[r] - pred
                })
                .collect()
        })
        .collect();

    Ok(OlsFit { coeffs, residuals })
}

// ---------------------------------------------------------------------------
// Design construction. Fits accept a list of contiguous segments so that
// purged cross-validation can exclude a test block without fabricating rows
// that straddle the gap.

fn check_segments(segments: &[&[f64]], p: usize, min_rows: usize) -> CoreResult<usize> {
    if p == 0 {
        return Err(CoreError::ConfigError("order p must be >= 1".into()));
    }
    let rows: usize = segments
        .iter()
        .map(|s| s.len().saturating_sub(p))
        .sum();
    if rows < min_rows {
        return Err(CoreError::SeriesTooShort {
            len: rows,
            need: min_rows,
        });
    }
    for s in segments {
        if let Some(index) = s.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteInput { index });
        }
    }
    Ok(rows)
}

/// Lagged design for a univariate AR(p): row t is `[1, y_{t-1}, .., y_{t-p}]`.
/// `min_lag` rows are built starting at `t = min_lag` within each segment.
fn ar_design(segments: &[&[f64]], p: usize, min_lag: usize) -> (Design, Vec<f64>) {
    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut rows = 0;
    for seg in segments {
        if seg.len() <= min_lag {
            continue;
        }
        for t in min_lag..seg.len() {
            data.push(1.0);
            for k in 1..=p {
                data.push(seg[t - k]);
            }
            targets.push(seg[t]);
            rows += 1;
        }
    }
    (
        Design {
            rows,
            cols: p + 1,
            data,
        },
        targets,
    )
}

/// Lag-major bivariate design: row t is
/// `[1, y1_{t-1}, y2_{t-1}, y1_{t-2}, y2_{t-2}, ...]`, so candidate orders are
/// column prefixes.
fn var_design(
    segments: &[(&[f64], &[f64])],
    p: usize,
    min_lag: usize,
) -> (Design, Vec<f64>, Vec<f64>) {
    let mut data = Vec::new();
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    let mut rows = 0;
    for (a, b) in segments {
        if a.len() <= min_lag {
            continue;
        }
        for t in min_lag..a.len() {
            data.push(1.0);
            for k in 1..=p {
                data.push(a[t - k]);
                data.push(b[t - k]);
            }
            t1.push(a[t]);
            t2.push(b[t]);
            rows += 1;
        }
    }
    (
        Design {
            rows,
            cols: 2 * p + 1,
            data,
        },
        t1,
        t2,
    )
}

// ---------------------------------------------------------------------------
// Public fitting and prediction.

/// Fits an AR(p) by OLS on the lagged design.
pub fn fit_ar(series: &[f64], p: usize) -> CoreResult<ArModel> {
    fit_ar_segments(&[series], p)
}

/// Same as [`fit_ar`] but pooling rows from several contiguous segments.
pub fn fit_ar_segments(segments: &[&[f64]], p: usize) -> CoreResult<ArModel> {
    check_segments(segments, p, p + 2)?;
    let (design, targets) = ar_design(segments, p, p);
    let fit = ols_solve(&design, &[&targets])?;
    let coeffs = &fit.coeffs[0];
    let rss: f64 = fit.residuals[0].iter().map(|r| r * r).sum();
    Ok(ArModel {
        order: p,
        intercept: coeffs[0],
        coeffs: coeffs[1..].to_vec(),
        noise_variance: rss / design.rows as f64,
    })
}

/// One-step-ahead prediction from the last `p` samples of `history`.
pub fn predict_ar(model: &ArModel, history: &[f64]) -> CoreResult<f64> {
    let p = model.order;
    if history.len() < p {
        return Err(CoreError::InsufficientHistory {
            got: history.len(),
            order: p,
        });
    }
    let n = history.len();
    let mut pred = model.intercept;
    for k in 1..=p {
        pred += model.coeffs[k - 1] * history[n - k];
    }
    Ok(pred)
}

/// Fits a two-channel VAR(p) by per-equation OLS (identical to multivariate
/// least squares for an unrestricted VAR).
pub fn fit_var(channel1: &[f64], channel2: &[f64], p: usize) -> CoreResult<VarModel> {
    if channel1.len() != channel2.len() {
        return Err(CoreError::LengthMismatch {
            left: channel1.len(),
            right: channel2.len(),
        });
    }
    fit_var_segments(&[(channel1, channel2)], p)
}

/// Same as [`fit_var`] but pooling rows from several contiguous segments.
pub fn fit_var_segments(segments: &[(&[f64], &[f64])], p: usize) -> CoreResult<VarModel> {
    for (a, b) in segments {
        if a.len() != b.len() {
            return Err(CoreError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
    }
    let firsts: Vec<&[f64]> = segments.iter().map(|(a, _)| *a).collect();
    check_segments(&firsts, p, p + 10)?;
    let (design, t1, t2) = var_design(segments, p, p);
    let fit = ols_solve(&design, &[&t1, &t2])?;

    let mut coeff_mats = vec![[[0.0; 2]; 2]; p];
    for (i, eq) in fit.coeffs.iter().enumerate() {
        for k in 0..p {
            coeff_mats[k][i][0] = eq[1 + 2 * k];
            coeff_mats[k][i][1] = eq[2 + 2 * k];
        }
    }
    let n = design.rows as f64;
    let (e1, e2) = (&fit.residuals[0], &fit.residuals[1]);
    let c11 = e1.iter().map(|r| r * r).sum::<f64>() / n;
    let c22 = e2.iter().map(|r| r * r).sum::<f64>() / n;
    let c12 = e1.iter().zip(e2).map(|(a, b)| a * b).sum::<f64>() / n;

    Ok(VarModel {
        order: p,
        intercepts: [fit.coeffs[0][0], fit.coeffs[1][0]],
        coeff_mats,
        resid_cov: [[c11, c12], [c12, c22]],
    })
}

/// One-step-ahead prediction for both channels from the last `p` samples of
/// each history.
pub fn predict_var(model: &VarModel, history1: &[f64], history2: &[f64]) -> CoreResult<(f64, f64)> {
    let p = model.order;
    if history1.len() < p || history2.len() < p {
        return Err(CoreError::InsufficientHistory {
            got: history1.len().min(history2.len()),
            order: p,
        });
    }
    let (n1, n2) = (history1.len(), history2.len());
    let mut pred = model.intercepts;
    for k in 1..=p {
        let mat = &model.coeff_mats[k - 1];
        for (i, pi) in pred.iter_mut().enumerate() {
            *pi += mat[i][0] * history1[n1 - k] + mat[i][1] * history2[n2 - k];
        }
    }
    Ok((pred[0], pred[1]))
}

/// Data handed to [`select_order`]: one or two channels.
pub enum OrderData<'a> {
    Univariate(&'a [f64]),
    Bivariate(&'a [f64], &'a [f64]),
}

/// Picks the order in `[1, p_max]` minimizing the criterion.
///
/// `AIC = N ln(det(residual covariance)) + 2k`, BIC substitutes `k ln N`,
/// with `k` the number of estimated parameters. All candidates are evaluated
/// on the rows valid at `p_max`; ties break toward smaller `p`.
pub fn select_order(
    data: &OrderData<'_>,
    p_max: usize,
    criterion: Criterion,
) -> CoreResult<OrderSelection> {
    if p_max < 1 {
        return Err(CoreError::ConfigError("p_max must be >= 1".into()));
    }

    // Full design at p_max; every candidate uses a column prefix of it so
    // all criteria see the same rows.
    let (full, targets) = match data {
        OrderData::Univariate(series) => {
            check_segments(&[series], p_max, p_max + 2)?;
            let (design, t) = ar_design(&[series], p_max, p_max);
            (design, vec![t])
        }
        OrderData::Bivariate(a, b) => {
            if a.len() != b.len() {
                return Err(CoreError::LengthMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
            check_segments(&[a], p_max, p_max + 10)?;
            let (design, t1, t2) = var_design(&[(a, b)], p_max, p_max);
            (design, vec![t1, t2])
        }
    };

    let mut values = Vec::with_capacity(p_max);
    let mut best: Option<(usize, f64)> = None;

    for p in 1..=p_max {
        let (cols, k_params) = match data {
            OrderData::Univariate(_) => (p + 1, p + 1),
            OrderData::Bivariate(..) => (2 * p + 1, 2 * (2 * p + 1)),
        };
        let design = prefix_columns(&full, cols);
        let target_refs: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
        let fit = ols_solve(&design, &target_refs)?;
        let n_rows = design.rows;
        let n = n_rows as f64;
        let ln_det = match data {
            OrderData::Univariate(_) => {
                let sigma2 = fit.residuals[0].iter().map(|r| r * r).sum::<f64>() / n;
                safe_ln(sigma2)?
            }
            OrderData::Bivariate(..) => {
                let (e1, e2) = (&fit.residuals[0], &fit.residuals[1]);
                let c11 = e1.iter().map(|r| r * r).sum::<f64>() / n;
                let c22 = e2.iter().map(|r| r * r).sum::<f64>() / n;
                let c12 = e1.iter().zip(e2.iter()).map(|(x, y)| x * y).sum::<f64>() / n;
                safe_ln(c11 * c22 - c12 * c12)?
            }
        };
        let penalty = match criterion {
            Criterion::Aic => 2.0 * k_params as f64,
            Criterion::Bic => k_params as f64 * math::ln(n),
        };
        let value = n * ln_det + penalty;
        values.push((p, value));
        // Strict `<` keeps the smaller order on ties.
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((p, value));
        }
    }

    let (order, _) = best.expect("p_max >= 1 guarantees a candidate");
    Ok(OrderSelection { order, values })
}

fn safe_ln(v: f64) -> CoreResult<f64> {
    if v <= 0.0 {
        // A perfect (noiseless) fit; treat as singular for selection purposes.
        return Err(CoreError::SingularDesign {
            detail: String::from("zero residual variance in order selection"),
        });
    }
    Ok(math::ln(v))
}

fn prefix_columns(full: &Design, cols: usize) -> Design {
    let mut data = Vec::with_capacity(full.rows * cols);
    for r in 0..full.rows {
        for c in 0..cols {
            data.push(full.at(r, c));
        }
    }
    Design {
        rows: full.rows,
        cols,
        data,
    }
}
