use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::error::{FcgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            epsilon: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    pub steps: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Result<Self> {
        if !(0.0..1.0).contains(&config.beta1) || !(0.0..1.0).contains(&config.beta2) {
            return Err(FcgError::domain("Adam betas must lie in [0, 1)"));
        }
        Ok(AdamState {
            config,
            first: Vec::new(),
            second: Vec::new(),
            steps: 0,
        })
    }

    /// Bias-corrected update of every block. Nothing is modified if any
    /// gradient is non-finite.
    pub fn step(&mut self, params: &mut [&mut Tensor2], grads: &[Tensor2], names: &[String]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(FcgError::shape(format!(
                "{} parameter blocks but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            g.expect_shape(p.shape(), "gradient")?;
            if !g.is_finite() {
                return Err(FcgError::PoisonedUpdate {
                    block: names.get(i).cloned().unwrap_or_else(|| format!("block {i}")),
                });
            }
        }
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![0.0; p.data.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != params.len()
            || self.first.iter().zip(params.iter()).any(|(m, p)| m.len() != p.data.len())
        {
            return Err(FcgError::shape("parameter layout changed between Adam steps"));
        }
        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (b, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first[b];
            let v = &mut self.second[b];
            for i in 0..g.data.len() {
                let gi = g.data[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p.data[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

/// Apply one Adam update to `params`.
pub fn adam_step(state: &mut AdamState, params: &mut [&mut Tensor2], grads: &[Tensor2]) -> Result<()> {
    let names: Vec<String> = (0..params.len()).map(|i| format!("block {i}")).collect();
    state.step(params, grads, &names)
}
