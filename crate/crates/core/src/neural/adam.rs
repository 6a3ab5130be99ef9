//! Adam optimizer with bias correction.

use alloc::vec::Vec;

use crate::error::{CoreError, CoreResult};
use crate::math;

use super::{ParamSet, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_stability: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_stability: 1e-8,
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step count.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> CoreResult<Self> {
        if !(config.learning_rate > 0.0) {
            return Err(CoreError::ConfigError(
                "learning rate must be positive".into(),
            ));
        }
        let m = params.ids().map(|id| Tensor::zeros(params.value(id).shape())).collect();
        let v = params.ids().map(|id| Tensor::zeros(params.value(id).shape())).collect();
        Ok(Self {
            config,
            step: 0,
            m,
            v,
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update from the gradients currently stored in `params`.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) -> CoreResult<()> {
    if state.m.len() != params.len() {
        return Err(CoreError::ShapeMismatch {
            op: "adam_step",
            detail: alloc::format!(
                "state tracks {} parameters, set has {}",
                state.m.len(),
                params.len()
            ),
        });
    }
    state.step += 1;
    let cfg = state.config;
    let bc1 = 1.0 - math::powf(cfg.beta1, state.step as f64);
    let bc2 = 1.0 - math::powf(cfg.beta2, state.step as f64);

    for (i, id) in params.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let grad = params.grad(id).data().to_vec();
        if grad.len() != state.m[i].len() {
            return Err(CoreError::ShapeMismatch {
                op: "adam_step",
                detail: alloc::format!("moment {i} has {} entries", state.m[i].len()),
            });
        }
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        let value = params.value_mut(id).data_mut();
        for j in 0..grad.len() {
            let g = grad[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            value[j] -= cfg.learning_rate * m_hat / (math::sqrt(v_hat) + cfg.eps_stability);
        }
    }
    Ok(())
}
