//! Feed-forward remaining-life regressor on frame latents.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::nn::{mse, Activation, AdamConfig, AdamState, Dense, Parameterized, Tensor2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeTrainConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for LifeTrainConfig {
    fn default() -> Self {
        LifeTrainConfig {
            hidden: vec![100, 100],
            epochs: 150,
            batch_size: 64,
            adam: AdamConfig::default(),
        }
    }
}

/// Affine z-score map `(x - mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    /// Population statistics of `values`; `None` for zero spread.
    pub fn fit(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        (std > 1e-12 * mean.abs().max(1.0) && std.is_finite()).then_some(Standardizer { mean, std })
    }

    pub fn identity() -> Self {
        Standardizer { mean: 0.0, std: 1.0 }
    }

    pub fn forward(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifeModel {
    pub layers: Vec<Dense>,
    pub target: Standardizer,
}

impl LifeModel {
    pub fn new(latent_dim: usize, hidden: &[usize], target: Standardizer, rng: &mut ChaCha8Rng) -> Self {
        let mut widths = vec![latent_dim];
        widths.extend_from_slice(hidden);
        let mut layers: Vec<Dense> = widths
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], Activation::Tanh, rng))
            .collect();
        layers.push(Dense::new(*widths.last().unwrap(), 1, Activation::Identity, rng));
        LifeModel { layers, target }
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    fn forward_normalized(&self, x: &Tensor2) -> Result<Tensor2> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Remaining life in cycles for one latent.
    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.latent_dim() {
            return Err(FcgError::shape(format!(
                "latent width {} vs life head input {}",
                z.len(),
                self.latent_dim()
            )));
        }
        let out = self.forward_normalized(&Tensor2::row_vector(z))?;
        Ok(self.target.inverse(out.data[0]))
    }

    pub fn predict_many(&self, zs: &[Vec<f64>]) -> Result<Vec<f64>> {
        if zs.is_empty() {
            return Ok(Vec::new());
        }
        let out = self.forward_normalized(&Tensor2::from_rows(zs)?)?;
        Ok(out.data.iter().map(|&v| self.target.inverse(v)).collect())
    }

    fn batch_gradients(&self, x: &Tensor2, y: &[f64]) -> Result<(f64, Vec<Tensor2>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&h)?;
            caches.push(cache);
            h = out;
        }
        let loss = mse(y, &h.data)?;
        let n = y.len() as f64;
        let mut d = Tensor2::from_vec(h.rows, 1, h.data.iter().zip(y).map(|(p, t)| 2.0 * (p - t) / n).collect())?;
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (dx, g) = layer.backward(&caches[i], &d, i > 0)?;
            grads.push(g);
            if let Some(dx) = dx {
                d = dx;
            }
        }
        grads.reverse();
        Ok((loss, grads.into_iter().flat_map(|g| g.into_vec()).collect()))
    }
}

impl Parameterized for LifeModel {
    fn params(&self) -> Vec<&Tensor2> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn param_names(&self) -> Vec<String> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.param_names().into_iter().map(move |n| format!("life.l{i}.{n}")))
            .collect()
    }
}

/// Regress remaining life from latents; returns the model and per-epoch
/// mean squared error in normalized units.
pub fn train_life(
    latents: &[Vec<f64>],
    lives: &[f64],
    cfg: &LifeTrainConfig,
    seed: u64,
) -> Result<(LifeModel, Vec<f64>)> {
    if latents.len() != lives.len() || latents.is_empty() {
        return Err(FcgError::shape(format!(
            "{} latents for {} life targets",
            latents.len(),
            lives.len()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(FcgError::config("training.batch_size", "must be >= 1"));
    }
    let target = Standardizer::fit(lives).ok_or(FcgError::DegenerateTarget)?;
    let d = latents[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = LifeModel::new(d, &cfg.hidden, target, &mut rng);
    let names = model.param_names();
    let mut adam = AdamState::new(cfg.adam)?;
    let normalized: Vec<f64> = lives.iter().map(|&v| target.forward(v)).collect();
    let mut order: Vec<usize> = (0..latents.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| latents[i].as_slice()).collect();
            let x = Tensor2::from_rows(&rows)?;
            let y: Vec<f64> = chunk.iter().map(|&i| normalized[i]).collect();
            let (loss, grads) = model.batch_gradients(&x, &y)?;
            if !loss.is_finite() {
                return Err(FcgError::Diverged { stage: "life", epoch });
            }
            adam.step(&mut model.params_mut(), &grads, &names)
                .map_err(|e| match e {
                    FcgError::PoisonedUpdate { .. } => FcgError::Diverged { stage: "life", epoch },
                    other => other,
                })?;
            total += loss * chunk.len() as f64;
        }
        trace.push(total / latents.len() as f64);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_round_trip() {
        let s = Standardizer::fit(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
        for v in [-3.0, 0.0, 7.5] {
            assert!((s.inverse(s.forward(v)) - v).abs() < 1e-12);
        }
        assert!(Standardizer::fit(&[5.0; 4]).is_none());
    }

    #[test]
    fn constant_targets_are_degenerate() {
        let zs = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let err = train_life(&zs, &[3e5, 3e5], &LifeTrainConfig::default(), 0).unwrap_err();
        assert!(matches!(err, FcgError::DegenerateTarget));
    }

    #[test]
    fn learns_linear_life_and_loss_decreases() {
        let zs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 20.0 - 1.0, 0.3]).collect();
        let lives: Vec<f64> = zs.iter().map(|z| 1e5 * (1.5 - z[0])).collect();
        let cfg = LifeTrainConfig {
            epochs: 200,
            batch_size: 8,
            ..Default::default()
        };
        let (model, trace) = train_life(&zs, &lives, &cfg, 4).unwrap();
        assert!(trace.last().unwrap() < &(0.1 * trace[0]));
        let pred = model.predict(&zs[10]).unwrap();
        assert!((pred - lives[10]).abs() < 0.05 * lives[10]);
    }

    #[test]
    fn training_is_deterministic() {
        let zs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, -(i as f64)]).collect();
        let lives: Vec<f64> = (0..12).map(|i| 100.0 + i as f64).collect();
        let cfg = LifeTrainConfig {
            epochs: 5,
            ..Default::default()
        };
        let a = train_life(&zs, &lives, &cfg, 9).unwrap();
        let b = train_life(&zs, &lives, &cfg, 9).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }
}
