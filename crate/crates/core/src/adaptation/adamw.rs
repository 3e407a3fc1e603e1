use serde::{Deserialize, Serialize};

use super::ThetaGradients;
use crate::operators::ThetaParams;
use crate::{Error, Result};

/// AdamW hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Moment accumulators and step counter. Owned by one optimizer run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub first_moment: ThetaParams,
    pub second_moment: ThetaParams,
    pub step: u64,
}

impl AdamWState {
    pub fn new(theta: &ThetaParams, config: AdamWConfig) -> Self {
        Self {
            config,
            first_moment: theta.zeros_like(),
            second_moment: theta.zeros_like(),
            step: 0,
        }
    }
}

/// One decoupled-weight-decay Adam update with bias-corrected moments.
///
/// Non-finite gradients abort the update with an error and leave both
/// `theta` and `state` untouched.
pub fn adamw_step(
    theta: &mut ThetaParams,
    grads: &ThetaGradients,
    state: &mut AdamWState,
) -> Result<()> {
    for (p, g) in theta.tensors().iter().zip(grads.tensors()) {
        if p.shape() != g.shape() {
            return Err(Error::shape(
                "adamw_step",
                format!("parameter {:?} vs gradient {:?}", p.shape(), g.shape()),
            ));
        }
    }
    if state.first_moment.dims() != theta.dims() {
        return Err(Error::shape("adamw_step", "optimizer state built for other dims"));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("adamw gradients"));
    }

    let AdamWConfig {
        learning_rate: lr,
        beta1,
        beta2,
        epsilon,
        weight_decay,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);
    let decay = 1.0 - lr * weight_decay;

    let params = theta.tensors_mut();
    let firsts = state.first_moment.tensors_mut();
    let seconds = state.second_moment.tensors_mut();
    for (((p, g), m), v) in params
        .into_iter()
        .zip(grads.tensors())
        .zip(firsts)
        .zip(seconds)
    {
        for (((p, &g), m), v) in p
            .as_mut_slice()
            .iter_mut()
            .zip(g.as_slice())
            .zip(m.as_mut_slice())
            .zip(v.as_mut_slice())
        {
            *p *= decay;
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
