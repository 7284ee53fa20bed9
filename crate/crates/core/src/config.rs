//! Toolkit configuration: one TOML file with a section per concern.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::container::{read_file, sha256_hex};
use crate::error::{FcgError, Result};
use crate::fracture::{MaterialSpec, PlateSpec};
use crate::library::{LibrarySpec, MIN_SAMPLES};
use crate::loads::NoiseSpec;
use crate::model::{
    LifeTrainConfig, SeqTrainConfig, StackConfig, VaeTrainConfig, DEFAULT_EPS, DEFAULT_MIN_PTS,
};
use crate::nn::{AdamConfig, ReconstructionNorm};
use crate::raster::MIN_RESOLUTION;
use crate::twin::DEFAULT_T_OBS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlicingSection {
    pub n_slices: usize,
}

impl Default for SlicingSection {
    fn default() -> Self {
        SlicingSection { n_slices: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibrarySection {
    pub n_samples: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl Default for LibrarySection {
    fn default() -> Self {
        LibrarySection {
            n_samples: 250,
            rows: 64,
            cols: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub latent_dim: usize,
    pub vae_epochs: usize,
    pub seq_epochs: usize,
    pub life_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub recon: ReconstructionNorm,
    pub cluster_eps: f64,
    pub cluster_min_pts: usize,
    /// false: the sequence model ignores rare samples' extra weight.
    pub reweight: bool,
    /// false: the sequence model learns from an unsliced companion library.
    pub slicing: bool,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let vae = VaeTrainConfig::default();
        let seq = SeqTrainConfig::default();
        TrainingSection {
            latent_dim: vae.latent_dim,
            vae_epochs: vae.epochs,
            seq_epochs: seq.epochs,
            life_epochs: LifeTrainConfig::default().epochs,
            batch_size: vae.batch_size,
            learning_rate: AdamConfig::default().learning_rate,
            lambda: seq.lambda,
            recon: vae.recon,
            cluster_eps: DEFAULT_EPS,
            cluster_min_pts: DEFAULT_MIN_PTS,
            reweight: true,
            slicing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub t_obs: Vec<f64>,
    pub resample_points: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            t_obs: DEFAULT_T_OBS.to_vec(),
            resample_points: crate::metrics::DEFAULT_RESAMPLE_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub plate: PlateSpec,
    pub material: MaterialSpec,
    pub noise: NoiseSpec,
    pub slicing: SlicingSection,
    pub library: LibrarySection,
    pub training: TrainingSection,
    pub evaluation: EvaluationSection,
}

impl ToolkitConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ToolkitConfig = toml::from_str(text).map_err(|e| {
            let field = e.message().split('`').nth(1).unwrap_or("config").to_string();
            FcgError::config(field, e.message().trim().to_string())
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|_| FcgError::format(path, "config is not UTF-8"))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.plate.validate()?;
        self.material.validate()?;
        self.noise.validate()?;
        if self.slicing.n_slices == 0 {
            return Err(FcgError::config("slicing.n_slices", "must be >= 1"));
        }
        if self.library.n_samples < MIN_SAMPLES {
            return Err(FcgError::config(
                "library.n_samples",
                format!("must be >= {MIN_SAMPLES}"),
            ));
        }
        for (field, v) in [("library.rows", self.library.rows), ("library.cols", self.library.cols)] {
            if v < MIN_RESOLUTION {
                return Err(FcgError::config(field, format!("must be >= {MIN_RESOLUTION}")));
            }
        }
        let t = &self.training;
        if t.latent_dim < 2 {
            return Err(FcgError::config("training.latent_dim", "must be >= 2"));
        }
        for (field, v) in [
            ("training.vae_epochs", t.vae_epochs),
            ("training.seq_epochs", t.seq_epochs),
            ("training.life_epochs", t.life_epochs),
            ("training.batch_size", t.batch_size),
            ("training.cluster_min_pts", t.cluster_min_pts),
        ] {
            if v == 0 {
                return Err(FcgError::config(field, "must be >= 1"));
            }
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(FcgError::config("training.learning_rate", "must be > 0"));
        }
        if !(t.lambda >= 0.0 && t.lambda.is_finite()) {
            return Err(FcgError::config("training.lambda", "must be >= 0"));
        }
        if !(t.cluster_eps > 0.0 && t.cluster_eps.is_finite()) {
            return Err(FcgError::config("training.cluster_eps", "must be > 0"));
        }
        let e = &self.evaluation;
        if e.t_obs.is_empty() || e.t_obs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(FcgError::config("evaluation.t_obs", "need one or more fractions in [0, 1]"));
        }
        if e.resample_points < 2 {
            return Err(FcgError::config("evaluation.resample_points", "must be >= 2"));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        sha256_hex(&json)[..16].to_string()
    }

    pub fn library_spec(&self) -> LibrarySpec {
        LibrarySpec {
            plate: self.plate,
            material: self.material,
            noise: self.noise,
            n_slices: self.slicing.n_slices,
            rows: self.library.rows,
            cols: self.library.cols,
        }
    }

    pub fn stack_config(&self) -> StackConfig {
        let t = &self.training;
        let adam = AdamConfig {
            learning_rate: t.learning_rate,
            ..AdamConfig::default()
        };
        StackConfig {
            vae: VaeTrainConfig {
                latent_dim: t.latent_dim,
                epochs: t.vae_epochs,
                batch_size: t.batch_size,
                recon: t.recon,
                adam,
                ..VaeTrainConfig::default()
            },
            seq: SeqTrainConfig {
                epochs: t.seq_epochs,
                batch_size: t.batch_size,
                lambda: if t.reweight { t.lambda } else { 0.0 },
                adam,
                ..SeqTrainConfig::default()
            },
            life: LifeTrainConfig {
                epochs: t.life_epochs,
                adam,
                ..LifeTrainConfig::default()
            },
            cluster_eps: t.cluster_eps,
            cluster_min_pts: t.cluster_min_pts,
        }
    }
}
