//! Central finite-difference verification of analytic gradients.
//!
//! The checker perturbs every parameter element in place (step 1e-5, f64),
//! re-evaluates the loss through a caller-supplied closure, and compares
//! against whatever gradients the caller has already accumulated. It is the
//! project's load-bearing correctness test and is exposed publicly so
//! integration suites can run it on full model graphs.

use crate::error::CoreResult;
use crate::math;

use super::ParamSet;

pub const FD_STEP: f64 = 1e-5;

/// Maximum relative error between the accumulated analytic gradients and
/// central finite differences, over every element of every parameter.
///
/// The relative error uses `|a - fd| / max(|a|, |fd|, 1e-4)`, which reads as
/// an absolute tolerance for near-zero gradients (finite differences carry
/// roundoff noise around 1e-11) and a true relative error everywhere else.
pub fn max_relative_error<F>(params: &mut ParamSet, loss_fn: F) -> CoreResult<f64>
where
    F: Fn(&ParamSet) -> CoreResult<f64>,
{
    let ids: alloc::vec::Vec<_> = params.ids().collect();
    let mut max_rel = 0.0f64;
    for id in ids {
        for j in 0..params.value(id).len() {
            let original = params.value(id).data()[j];

            params.value_mut(id).data_mut()[j] = original + FD_STEP;
            let loss_plus = loss_fn(params)?;
            params.value_mut(id).data_mut()[j] = original - FD_STEP;
            let loss_minus = loss_fn(params)?;
            params.value_mut(id).data_mut()[j] = original;

            let fd = (loss_plus - loss_minus) / (2.0 * FD_STEP);
            let analytic = params.grad(id).data()[j];
            let denom = math::abs(analytic).max(math::abs(fd)).max(1e-4);
            let rel = math::abs(analytic - fd) / denom;
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
