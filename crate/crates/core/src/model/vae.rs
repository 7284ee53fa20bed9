//! Variational autoencoder over voxel frames.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::nn::{
    kl_divergence, Activation, AdamConfig, AdamState, Dense, DenseCache, GaussianLatent,
    Parameterized, ReconstructionNorm, Tensor2,
};
use crate::raster::VoxelGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeTrainConfig {
    pub latent_dim: usize,
    /// Hidden widths of the encoder; the decoder mirrors them.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub recon: ReconstructionNorm,
    pub adam: AdamConfig,
}

impl Default for VaeTrainConfig {
    fn default() -> Self {
        VaeTrainConfig {
            latent_dim: 2,
            hidden: vec![256, 64],
            epochs: 30,
            batch_size: 32,
            recon: ReconstructionNorm::SumSquared,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    pub latent_dim: usize,
    pub rows: usize,
    pub cols: usize,
}

pub(crate) fn grid_row(grid: &VoxelGrid) -> Vec<f64> {
    grid.values.iter().map(|&v| v as f64).collect()
}

fn grids_to_tensor(grids: &[&VoxelGrid]) -> Result<Tensor2> {
    let rows: Vec<Vec<f64>> = grids.iter().map(|g| grid_row(g)).collect();
    Tensor2::from_rows(&rows)
}

impl VaeModel {
    pub fn new(rows: usize, cols: usize, latent_dim: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if latent_dim < 2 {
            return Err(FcgError::config("training.latent_dim", "must be >= 2"));
        }
        let input = rows * cols;
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        let mut encoder = Vec::new();
        for w in widths.windows(2) {
            encoder.push(Dense::new(w[0], w[1], Activation::Tanh, rng));
        }
        encoder.push(Dense::new(*widths.last().unwrap(), 2 * latent_dim, Activation::Identity, rng));
        let mut decoder = Vec::new();
        let mut dec_widths = vec![latent_dim];
        dec_widths.extend(hidden.iter().rev());
        for w in dec_widths.windows(2) {
            decoder.push(Dense::new(w[0], w[1], Activation::Tanh, rng));
        }
        decoder.push(Dense::new(*dec_widths.last().unwrap(), input, Activation::Sigmoid, rng));
        Ok(VaeModel {
            encoder,
            decoder,
            latent_dim,
            rows,
            cols,
        })
    }

    fn check_grid(&self, grid: &VoxelGrid) -> Result<()> {
        if grid.rows != self.rows || grid.cols != self.cols {
            return Err(FcgError::shape(format!(
                "grid {}x{} does not match the model's {}x{}",
                grid.rows, grid.cols, self.rows, self.cols
            )));
        }
        Ok(())
    }

    /// Posterior mean and log-variance for a batch of flattened frames.
    pub fn encode_batch(&self, x: &Tensor2) -> Result<(Tensor2, Tensor2)> {
        let mut h = x.clone();
        for layer in &self.encoder {
            h = layer.infer(&h)?;
        }
        Ok((h.columns(0, self.latent_dim), h.columns(self.latent_dim, self.latent_dim)))
    }

    pub fn posterior(&self, grid: &VoxelGrid) -> Result<GaussianLatent> {
        self.check_grid(grid)?;
        let (mu, lv) = self.encode_batch(&Tensor2::row_vector(&grid_row(grid)))?;
        Ok(GaussianLatent {
            mean: mu.data,
            log_var: lv.data,
        })
    }

    /// Deterministic encoding: the posterior mean.
    pub fn encode(&self, grid: &VoxelGrid) -> Result<Vec<f64>> {
        Ok(self.posterior(grid)?.mean)
    }

    pub fn encode_many(&self, grids: &[&VoxelGrid]) -> Result<Vec<Vec<f64>>> {
        for g in grids {
            self.check_grid(g)?;
        }
        let mut out = Vec::with_capacity(grids.len());
        for chunk in grids.chunks(256) {
            let (mu, _) = self.encode_batch(&grids_to_tensor(chunk)?)?;
            out.extend((0..mu.rows).map(|r| mu.row(r).to_vec()));
        }
        Ok(out)
    }

    pub fn decode_batch(&self, z: &Tensor2) -> Result<Tensor2> {
        if z.cols != self.latent_dim {
            return Err(FcgError::shape(format!(
                "latent width {} vs model dimension {}",
                z.cols, self.latent_dim
            )));
        }
        let mut h = z.clone();
        for layer in &self.decoder {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Real-valued reconstruction in [0, 1].
    pub fn decode(&self, z: &[f64], template: &VoxelGrid) -> Result<VoxelGrid> {
        self.check_grid(template)?;
        let out = self.decode_batch(&Tensor2::row_vector(z))?;
        Ok(VoxelGrid {
            values: out.data.iter().map(|&v| v as f32).collect(),
            ..template.clone()
        })
    }

    /// Mean per-frame loss and parameter gradients for one batch.
    pub fn batch_gradients(
        &self,
        x: &Tensor2,
        noise: &Tensor2,
        recon: ReconstructionNorm,
    ) -> Result<(f64, Vec<Tensor2>)> {
        let batch = x.rows as f64;
        let d = self.latent_dim;
        let mut enc_caches: Vec<DenseCache> = Vec::with_capacity(self.encoder.len());
        let mut h = x.clone();
        for layer in &self.encoder {
            let (out, cache) = layer.forward(&h)?;
            enc_caches.push(cache);
            h = out;
        }
        let mu = h.columns(0, d);
        let log_var = h.columns(d, d);
        noise.expect_shape(mu.shape(), "reparameterisation noise")?;
        let mut z = mu.clone();
        for i in 0..z.data.len() {
            z.data[i] += (0.5 * log_var.data[i]).exp() * noise.data[i];
        }
        let mut dec_caches = Vec::with_capacity(self.decoder.len());
        let mut y = z.clone();
        for layer in &self.decoder {
            let (out, cache) = layer.forward(&y)?;
            dec_caches.push(cache);
            y = out;
        }

        let mut loss = 0.0;
        for r in 0..x.rows {
            loss += recon.value(x.row(r), y.row(r));
            loss += kl_divergence(&GaussianLatent {
                mean: mu.row(r).to_vec(),
                log_var: log_var.row(r).to_vec(),
            })?;
        }
        loss /= batch;

        let scale = recon.grad_scale(x.cols) / batch;
        let mut dy = y.zip_map(x, |p, t| scale * (p - t))?;
        let mut dec_grads = Vec::with_capacity(self.decoder.len());
        for (i, layer) in self.decoder.iter().enumerate().rev() {
            let (dx, g) = layer.backward(&dec_caches[i], &dy, true)?;
            dec_grads.push(g);
            dy = dx.expect("input gradient requested");
        }
        dec_grads.reverse();
        let dz = dy;

        let mut dh = Tensor2::zeros(x.rows, 2 * d);
        for r in 0..x.rows {
            for j in 0..d {
                let i = r * d + j;
                let lv = log_var.data[i];
                let sigma = (0.5 * lv).exp();
                dh.data[r * 2 * d + j] = dz.data[i] + mu.data[i] / batch;
                dh.data[r * 2 * d + d + j] =
                    dz.data[i] * noise.data[i] * 0.5 * sigma + 0.5 * (lv.exp() - 1.0) / batch;
            }
        }
        let mut enc_grads = Vec::with_capacity(self.encoder.len());
        for (i, layer) in self.encoder.iter().enumerate().rev() {
            let (dx, g) = layer.backward(&enc_caches[i], &dh, i > 0)?;
            enc_grads.push(g);
            if let Some(dx) = dx {
                dh = dx;
            }
        }
        enc_grads.reverse();
        let grads = enc_grads
            .into_iter()
            .chain(dec_grads)
            .flat_map(|g| g.into_vec())
            .collect();
        Ok((loss, grads))
    }
}

impl Parameterized for VaeModel {
    fn params(&self) -> Vec<&Tensor2> {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .flat_map(|l| l.params())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor2> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| l.params_mut())
            .collect()
    }

    fn param_names(&self) -> Vec<String> {
        let enc = self.encoder.iter().enumerate().flat_map(|(i, l)| {
            l.param_names().into_iter().map(move |n| format!("vae.enc{i}.{n}"))
        });
        let dec = self.decoder.iter().enumerate().flat_map(|(i, l)| {
            l.param_names().into_iter().map(move |n| format!("vae.dec{i}.{n}"))
        });
        enc.chain(dec).collect()
    }
}

pub fn standard_normal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    Tensor2 {
        rows,
        cols,
        data: (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect(),
    }
}

/// Fit the VAE to `frames`; returns the model and the per-epoch mean loss.
pub fn train_vae(frames: &[&VoxelGrid], cfg: &VaeTrainConfig, seed: u64) -> Result<(VaeModel, Vec<f64>)> {
    let first = frames
        .first()
        .ok_or_else(|| FcgError::domain("no frames to train the VAE on"))?;
    if cfg.batch_size == 0 {
        return Err(FcgError::config("training.batch_size", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = VaeModel::new(first.rows, first.cols, cfg.latent_dim, &cfg.hidden, &mut rng)?;
    for f in frames {
        model.check_grid(f)?;
    }
    let names = model.param_names();
    let mut adam = AdamState::new(cfg.adam)?;
    let mut order: Vec<usize> = (0..frames.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&VoxelGrid> = chunk.iter().map(|&i| frames[i]).collect();
            let x = grids_to_tensor(&batch)?;
            let noise = standard_normal(x.rows, cfg.latent_dim, &mut rng);
            let (loss, grads) = model.batch_gradients(&x, &noise, cfg.recon)?;
            if !loss.is_finite() {
                return Err(FcgError::Diverged { stage: "vae", epoch });
            }
            adam.step(&mut model.params_mut(), &grads, &names)
                .map_err(|e| match e {
                    FcgError::PoisonedUpdate { .. } => FcgError::Diverged { stage: "vae", epoch },
                    other => other,
                })?;
            total += loss * chunk.len() as f64;
        }
        trace.push(total / frames.len() as f64);
    }
    Ok((model, trace))
}
