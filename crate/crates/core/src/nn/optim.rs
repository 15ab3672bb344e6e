use serde::{Deserialize, Serialize};

use super::{NnError, ParamSet, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NadamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        NadamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Nesterov-accelerated Adam state: one pair of moment tensors per
/// parameter, created as zeros on the first step.
#[derive(Debug, Clone)]
pub struct NadamState {
    pub config: NadamConfig,
    pub t: u64,
    moments: Vec<(Tensor, Tensor)>,
}

impl NadamState {
    pub fn new(config: NadamConfig) -> Self {
        NadamState {
            config,
            t: 0,
            moments: Vec::new(),
        }
    }

    /// Applies one update to every parameter of `model` using its `grad`.
    ///
    /// With `t` the step count after this update:
    /// `m̂ = m / (1 - β1^(t+1))`, `v̂ = v / (1 - β2^t)`,
    /// `θ -= lr (β1 m̂ + (1-β1) g / (1 - β1^t)) / (√v̂ + ε)`.
    pub fn step<M: ParamSet + ?Sized>(&mut self, model: &mut M) -> Result<(), NnError> {
        let mut params = model.params_mut();
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|p| {
                    (
                        Tensor::zeros(p.value.shape()),
                        Tensor::zeros(p.value.shape()),
                    )
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(NnError::Shape(format!(
                "optimizer tracks {} parameters, model has {}",
                self.moments.len(),
                params.len()
            )));
        }
        for (p, (m, v)) in params.iter().zip(&self.moments) {
            if p.grad.shape() != p.value.shape()
                || m.shape() != p.value.shape()
                || v.shape() != p.value.shape()
            {
                return Err(NnError::Shape(format!(
                    "moment/gradient shape mismatch for {}",
                    p.name
                )));
            }
        }

        let t = self.t + 1;
        let NadamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let m_corr = 1.0 - beta1.powf((t + 1) as f64);
        let g_corr = 1.0 - beta1.powf(t as f64);
        let v_corr = 1.0 - beta2.powf(t as f64);
        for (p, (m, v)) in params.iter_mut().zip(self.moments.iter_mut()) {
            let grads = p.grad.data().to_vec();
            let theta = p.value.data_mut();
            for (k, &g) in grads.iter().enumerate() {
                let mk = &mut m.data_mut()[k];
                *mk = beta1 * *mk + (1.0 - beta1) * g;
                let mhat = *mk / m_corr;
                let vk = &mut v.data_mut()[k];
                *vk = beta2 * *vk + (1.0 - beta2) * g * g;
                let vhat = *vk / v_corr;
                theta[k] -= lr * (beta1 * mhat + (1.0 - beta1) * g / g_corr) / (vhat.sqrt() + eps);
            }
        }
        self.t = t;
        Ok(())
    }
}
