//! The surrogate stack: VAE, latent seq2seq and life head, plus rare-pattern
//! labelling in latent space.

pub mod bundle;
pub mod cluster;
pub mod life;
pub mod seq;
pub mod vae;

use serde::{Deserialize, Serialize};

use crate::container::{mix_seed, sha256_hex};
use crate::error::{FcgError, Result};
use crate::fracture::PlateSpec;
use crate::library::{unsliced_companion, Library, LibrarySample};
use crate::raster::VoxelGrid;

pub use bundle::{load_bundle, save_bundle, BUNDLE_FILE, MODEL_MAGIC, MODEL_VERSION, PARAMS_FILE};
pub use cluster::{label_rare, ClusterLabeling, DEFAULT_EPS, DEFAULT_MIN_PTS, RARE_CLUSTER_FRACTION};
pub use life::{train_life, LifeModel, LifeTrainConfig, Standardizer};
pub use seq::{train_seq, SeqModel, SeqTrainConfig, Trajectory};
pub use vae::{train_vae, VaeModel, VaeTrainConfig};

pub const MIN_TRAIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackConfig {
    pub vae: VaeTrainConfig,
    pub seq: SeqTrainConfig,
    pub life: LifeTrainConfig,
    pub cluster_eps: f64,
    pub cluster_min_pts: usize,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            vae: VaeTrainConfig::default(),
            seq: SeqTrainConfig::default(),
            life: LifeTrainConfig::default(),
            cluster_eps: DEFAULT_EPS,
            cluster_min_pts: DEFAULT_MIN_PTS,
        }
    }
}

/// Trained networks plus everything needed to use them on new frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub vae: VaeModel,
    pub seq: SeqModel,
    pub life: LifeModel,
    /// Per-dimension z-score of VAE means, fitted on training frames.
    pub latent_norm: Vec<Standardizer>,
    pub plate: PlateSpec,
    /// Longest training sequence minus one frame.
    pub horizon: usize,
    pub config: StackConfig,
    pub config_hash: String,
}

impl ModelBundle {
    pub fn latent_dim(&self) -> usize {
        self.vae.latent_dim
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.vae.rows, self.vae.cols)
    }

    pub fn normalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.latent_norm).map(|(v, s)| s.forward(*v)).collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.latent_norm).map(|(v, s)| s.inverse(*v)).collect()
    }

    /// Normalized latent of each frame.
    pub fn encode_frames(&self, frames: &[&VoxelGrid]) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .vae
            .encode_many(frames)?
            .iter()
            .map(|z| self.normalize(z))
            .collect())
    }

    pub fn decode_normalized(&self, z: &[f64], template: &VoxelGrid) -> Result<VoxelGrid> {
        self.vae.decode(&self.denormalize(z), template)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub vae_loss: Vec<f64>,
    pub seq_loss: Vec<f64>,
    pub life_loss: Vec<f64>,
    /// Clustering of the sequence-training samples' final-frame latents.
    pub labeling: ClusterLabeling,
    /// Rare flag per sequence-training sample, in split order.
    pub rare: Vec<bool>,
}

fn fit_latent_norm(latents: &[Vec<f64>]) -> Vec<Standardizer> {
    let d = latents[0].len();
    (0..d)
        .map(|k| {
            let col: Vec<f64> = latents.iter().map(|z| z[k]).collect();
            Standardizer::fit(&col).unwrap_or_else(Standardizer::identity)
        })
        .collect()
}

fn normalized_trajectories(
    vae: &VaeModel,
    norm: &[Standardizer],
    samples: &[&LibrarySample],
) -> Result<Vec<Trajectory>> {
    samples
        .iter()
        .map(|s| {
            let frames: Vec<&VoxelGrid> = s.frames.iter().collect();
            Ok(vae
                .encode_many(&frames)?
                .into_iter()
                .map(|z| z.iter().zip(norm).map(|(v, st)| st.forward(*v)).collect())
                .collect())
        })
        .collect()
}

/// Rare samples: latent-space outliers of the final frame, or samples whose
/// load draw fell in the Gaussian tail.
pub fn rare_mask(
    trajectories: &[Trajectory],
    samples: &[&LibrarySample],
    eps: f64,
    min_pts: usize,
) -> Result<(ClusterLabeling, Vec<bool>)> {
    let finals: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|t| t.last().cloned().unwrap_or_default())
        .collect();
    let labeling = label_rare(&finals, eps, min_pts)?;
    let rare = labeling
        .rare()
        .into_iter()
        .zip(samples)
        .map(|(cluster_rare, s)| cluster_rare || s.rare)
        .collect();
    Ok((labeling, rare))
}

pub fn stack_hash(cfg: &StackConfig, library_hash: &str, seed: u64) -> String {
    let body = serde_json::to_string(cfg).expect("config serializes");
    sha256_hex(format!("{body}|{library_hash}|{seed}").as_bytes())[..16].to_string()
}

/// Everything except the sequence model: VAE, latent normalization and
/// life head, trained on the training split of one library.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    pub vae: VaeModel,
    pub latent_norm: Vec<Standardizer>,
    pub life: LifeModel,
    pub plate: PlateSpec,
    pub horizon: usize,
    pub vae_loss: Vec<f64>,
    pub life_loss: Vec<f64>,
}

impl Representation {
    pub fn trajectories(&self, samples: &[&LibrarySample]) -> Result<Vec<Trajectory>> {
        normalized_trajectories(&self.vae, &self.latent_norm, samples)
    }
}

pub fn train_representation(lib: &Library, cfg: &StackConfig, seed: u64) -> Result<Representation> {
    let train = lib.train_samples();
    if train.len() < MIN_TRAIN_SAMPLES {
        return Err(FcgError::domain(format!(
            "{} training samples; at least {MIN_TRAIN_SAMPLES} required",
            train.len()
        )));
    }
    let frames: Vec<&VoxelGrid> = train.iter().flat_map(|s| s.frames.iter()).collect();
    let (vae, vae_loss) = train_vae(&frames, &cfg.vae, mix_seed(seed, 1, 0))?;
    let raw = vae.encode_many(&frames)?;
    let latent_norm = fit_latent_norm(&raw);
    let norm_latents: Vec<Vec<f64>> = raw
        .iter()
        .map(|z| z.iter().zip(&latent_norm).map(|(v, s)| s.forward(*v)).collect())
        .collect();
    let lives: Vec<f64> = train.iter().flat_map(|s| s.remaining_life.iter().copied()).collect();
    let (life, life_loss) = train_life(&norm_latents, &lives, &cfg.life, mix_seed(seed, 3, 0))?;
    let horizon = train.iter().map(|s| s.n_frames()).max().unwrap_or(1) - 1;
    Ok(Representation {
        vae,
        latent_norm,
        life,
        plate: lib.spec.plate,
        horizon,
        vae_loss,
        life_loss,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFit {
    pub seq: SeqModel,
    pub loss: Vec<f64>,
    pub labeling: ClusterLabeling,
    pub rare: Vec<bool>,
}

/// Fit the sequence model to the training split of `lib`, encoded through
/// `rep`.
pub fn train_sequence(rep: &Representation, lib: &Library, cfg: &StackConfig, seed: u64) -> Result<SequenceFit> {
    if (lib.spec.rows, lib.spec.cols) != (rep.vae.rows, rep.vae.cols) {
        return Err(FcgError::shape("sequence library resolution differs from the VAE's"));
    }
    let samples = lib.train_samples();
    let trajectories = rep.trajectories(&samples)?;
    let (labeling, rare) = rare_mask(&trajectories, &samples, cfg.cluster_eps, cfg.cluster_min_pts)?;
    let (seq, loss) = train_seq(&trajectories, &rare, &cfg.seq, mix_seed(seed, 2, 0))?;
    Ok(SequenceFit {
        seq,
        loss,
        labeling,
        rare,
    })
}

pub fn assemble(rep: &Representation, seq: SeqModel, cfg: &StackConfig, config_hash: String) -> ModelBundle {
    ModelBundle {
        vae: rep.vae.clone(),
        seq,
        life: rep.life.clone(),
        latent_norm: rep.latent_norm.clone(),
        plate: rep.plate,
        horizon: rep.horizon,
        config: cfg.clone(),
        config_hash,
    }
}

/// Train VAE, sequence model and life head on the training split of `lib`.
///
/// The sequence model learns from `seq_library` when given (encoded through
/// the VAE trained on `lib`), otherwise from `lib` itself.
pub fn train_stack(
    lib: &Library,
    cfg: &StackConfig,
    seed: u64,
    seq_library: Option<&Library>,
) -> Result<(ModelBundle, TrainReport)> {
    let rep = train_representation(lib, cfg, seed)?;
    let fit = train_sequence(&rep, seq_library.unwrap_or(lib), cfg, seed)?;
    let bundle = assemble(&rep, fit.seq, cfg, stack_hash(cfg, &lib.config_hash, seed));
    let report = TrainReport {
        vae_loss: rep.vae_loss,
        seq_loss: fit.loss,
        life_loss: rep.life_loss,
        labeling: fit.labeling,
        rare: fit.rare,
    };
    Ok((bundle, report))
}

/// [`train_stack`] with the path-slicing ablation switch: without slicing the
/// sequence model learns from the library's unsliced companion.
pub fn train_stack_with(
    lib: &Library,
    cfg: &StackConfig,
    seed: u64,
    slicing: bool,
) -> Result<(ModelBundle, TrainReport)> {
    if slicing {
        train_stack(lib, cfg, seed, None)
    } else {
        let companion = unsliced_companion(lib)?;
        train_stack(lib, cfg, seed, Some(&companion))
    }
}
