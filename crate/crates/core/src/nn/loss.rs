use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};

/// Diagonal Gaussian posterior, stored as mean and log-variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl GaussianLatent {
    pub fn standard(dim: usize) -> Self {
        GaussianLatent {
            mean: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }

    pub fn variance(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| lv.exp()).collect()
    }
}

/// How the reconstruction term of the VAE objective is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionNorm {
    /// Mean of squared voxel errors.
    #[default]
    MeanSquared,
    /// Sum of squared voxel errors (Gaussian log-likelihood up to constants).
    SumSquared,
}

impl ReconstructionNorm {
    pub fn value(self, x: &[f64], x_hat: &[f64]) -> f64 {
        let sse: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
        match self {
            ReconstructionNorm::MeanSquared => sse / x.len() as f64,
            ReconstructionNorm::SumSquared => sse,
        }
    }

    /// d(term)/d(x_hat_i) scale: the gradient is `scale · (x_hat_i − x_i)`.
    pub fn grad_scale(self, len: usize) -> f64 {
        match self {
            ReconstructionNorm::MeanSquared => 2.0 / len as f64,
            ReconstructionNorm::SumSquared => 2.0,
        }
    }
}

/// KL(N(μ, diag σ²) ‖ N(0, I)) = ½ Σ (μ² + σ² − ln σ² − 1).
pub fn kl_divergence(latent: &GaussianLatent) -> Result<f64> {
    if latent.mean.len() != latent.log_var.len() {
        return Err(FcgError::shape("latent mean and log-variance lengths differ"));
    }
    if latent.mean.iter().chain(&latent.log_var).any(|v| !v.is_finite()) {
        return Err(FcgError::domain("non-finite latent parameters"));
    }
    Ok(0.5
        * latent
            .mean
            .iter()
            .zip(&latent.log_var)
            .map(|(m, lv)| m * m + lv.exp() - lv - 1.0)
            .sum::<f64>())
}

pub fn vae_loss(x: &[f64], x_hat: &[f64], latent: &GaussianLatent) -> Result<f64> {
    vae_loss_with(x, x_hat, latent, ReconstructionNorm::MeanSquared)
}

pub fn vae_loss_with(
    x: &[f64],
    x_hat: &[f64],
    latent: &GaussianLatent,
    norm: ReconstructionNorm,
) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(FcgError::shape(format!(
            "reconstruction has {} values, input {}",
            x_hat.len(),
            x.len()
        )));
    }
    if x.is_empty() {
        return Err(FcgError::shape("empty input"));
    }
    Ok(norm.value(x, x_hat) + kl_divergence(latent)?)
}

pub fn mse(z: &[f64], z_hat: &[f64]) -> Result<f64> {
    if z.len() != z_hat.len() {
        return Err(FcgError::shape("mse operands differ in length"));
    }
    if z.is_empty() {
        return Ok(0.0);
    }
    Ok(z.iter().zip(z_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / z.len() as f64)
}

/// MSE(z, ẑ) + λ·MSE over the entries flagged rare.
pub fn reweighted_mse(z: &[f64], z_hat: &[f64], rare_mask: &[bool], lambda: f64) -> Result<f64> {
    Ok(reweighted_mse_grad(z, z_hat, rare_mask, lambda)?.0)
}

/// Loss together with d(loss)/d(ẑ).
pub fn reweighted_mse_grad(
    z: &[f64],
    z_hat: &[f64],
    rare_mask: &[bool],
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    if z.len() != z_hat.len() || z.len() != rare_mask.len() {
        return Err(FcgError::shape(format!(
            "reweighted mse lengths {} / {} / {}",
            z.len(),
            z_hat.len(),
            rare_mask.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(FcgError::domain("enrichment factor must be >= 0"));
    }
    let n = z.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let n_rare = rare_mask.iter().filter(|&&r| r).count();
    let mut all = 0.0;
    let mut rare = 0.0;
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let d = z_hat[i] - z[i];
        all += d * d;
        let mut g = 2.0 * d / n as f64;
        if rare_mask[i] {
            rare += d * d;
            g += lambda * 2.0 * d / n_rare as f64;
        }
        grad.push(g);
    }
    let rare_term = if n_rare > 0 { rare / n_rare as f64 } else { 0.0 };
    Ok((all / n as f64 + lambda * rare_term, grad))
}
