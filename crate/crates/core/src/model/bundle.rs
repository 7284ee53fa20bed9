//! Model checkpoint: `bundle.json` describing every parameter block plus
//! `params.bin` holding the values as little-endian f32.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::life::{LifeModel, Standardizer};
use super::seq::SeqModel;
use super::vae::VaeModel;
use super::{ModelBundle, StackConfig};
use crate::container::{read_file, sha256_hex, write_file, BlobReader, BlobWriter};
use crate::error::{FcgError, Result};
use crate::fracture::PlateSpec;
use crate::nn::{Parameterized, Tensor2};

pub const MODEL_MAGIC: &[u8; 4] = b"FCGM";
pub const MODEL_VERSION: u32 = 1;
pub const BUNDLE_FILE: &str = "bundle.json";
pub const PARAMS_FILE: &str = "params.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BlockEntry {
    name: String,
    shape: [usize; 2],
    offset: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BundleManifest {
    format: String,
    version: u32,
    config_hash: String,
    rows: usize,
    cols: usize,
    latent_dim: usize,
    horizon: usize,
    plate: PlateSpec,
    config: StackConfig,
    latent_norm: Vec<Standardizer>,
    life_target: Standardizer,
    params_file: String,
    params_sha256: String,
    blocks: Vec<BlockEntry>,
}

fn all_blocks(b: &ModelBundle) -> (Vec<String>, Vec<&Tensor2>) {
    let mut names = b.vae.param_names();
    names.extend(b.seq.param_names());
    names.extend(b.life.param_names());
    let mut params = b.vae.params();
    params.extend(b.seq.params());
    params.extend(b.life.params());
    (names, params)
}

pub fn save_bundle(bundle: &ModelBundle, dir: &Path) -> Result<()> {
    let (names, params) = all_blocks(bundle);
    let total: usize = params.iter().map(|p| p.data.len()).sum();
    let mut w = BlobWriter::new();
    w.magic(MODEL_MAGIC).u32(MODEL_VERSION).u32(params.len() as u32).u32(total as u32);
    let mut blocks = Vec::with_capacity(params.len());
    let mut offset = 0;
    for (name, p) in names.into_iter().zip(&params) {
        w.f32s(p.data.iter().map(|&v| v as f32));
        blocks.push(BlockEntry {
            name,
            shape: [p.rows, p.cols],
            offset,
        });
        offset += p.data.len();
    }
    let bytes = w.finish();
    write_file(&dir.join(PARAMS_FILE), &bytes)?;
    let manifest = BundleManifest {
        format: "FCGM".into(),
        version: MODEL_VERSION,
        config_hash: bundle.config_hash.clone(),
        rows: bundle.vae.rows,
        cols: bundle.vae.cols,
        latent_dim: bundle.latent_dim(),
        horizon: bundle.horizon,
        plate: bundle.plate,
        config: bundle.config.clone(),
        latent_norm: bundle.latent_norm.clone(),
        life_target: bundle.life.target,
        params_file: PARAMS_FILE.into(),
        params_sha256: sha256_hex(&bytes),
        blocks,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("bundle manifest serializes");
    write_file(&dir.join(BUNDLE_FILE), &json)
}

pub fn load_bundle(dir: &Path) -> Result<ModelBundle> {
    let manifest_path = dir.join(BUNDLE_FILE);
    let raw = read_file(&manifest_path)?;
    let m: BundleManifest =
        serde_json::from_slice(&raw).map_err(|e| FcgError::format(&manifest_path, e.to_string()))?;
    if m.version != MODEL_VERSION {
        return Err(FcgError::VersionMismatch {
            path: manifest_path,
            found: m.version,
            expected: MODEL_VERSION,
        });
    }
    if m.latent_norm.len() != m.latent_dim {
        return Err(FcgError::format(&manifest_path, "latent normalization width differs from latent_dim"));
    }
    let params_path = dir.join(&m.params_file);
    if !params_path.exists() {
        return Err(FcgError::MissingPart {
            sample_id: "model".into(),
            path: params_path,
        });
    }
    let bytes = read_file(&params_path)?;
    let mut r = BlobReader::new(&bytes, &params_path);
    r.expect_magic(MODEL_MAGIC)?;
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(FcgError::VersionMismatch {
            path: params_path,
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let n_blocks = r.u32("block count")? as usize;
    let total = r.u32("value count")? as usize;
    if n_blocks != m.blocks.len() {
        return Err(FcgError::format(
            &params_path,
            format!("{n_blocks} blocks in header, {} in manifest", m.blocks.len()),
        ));
    }
    r.require_f32s(total, "parameter values")?;
    if sha256_hex(&bytes) != m.params_sha256 {
        return Err(FcgError::Checksum { path: params_path });
    }
    let values = r.f32s(total, "parameter values")?;
    if r.remaining() != 0 {
        return Err(FcgError::format(&params_path, "trailing bytes after parameters"));
    }

    // rebuild the architecture, then overwrite its parameters block by block
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let vae = VaeModel::new(m.rows, m.cols, m.latent_dim, &m.config.vae.hidden, &mut rng)?;
    let seq = SeqModel::new(m.latent_dim, m.config.seq.hidden, &mut rng);
    let life = LifeModel::new(m.latent_dim, &m.config.life.hidden, m.life_target, &mut rng);
    let mut bundle = ModelBundle {
        vae,
        seq,
        life,
        latent_norm: m.latent_norm,
        plate: m.plate,
        horizon: m.horizon,
        config: m.config,
        config_hash: m.config_hash,
    };
    let (names, _) = all_blocks(&bundle);
    let mut targets = bundle.vae.params_mut();
    targets.extend(bundle.seq.params_mut());
    targets.extend(bundle.life.params_mut());
    if targets.len() != m.blocks.len() {
        return Err(FcgError::format(
            &manifest_path,
            format!("architecture has {} blocks, manifest {}", targets.len(), m.blocks.len()),
        ));
    }
    for ((target, entry), name) in targets.into_iter().zip(&m.blocks).zip(&names) {
        if &entry.name != name || entry.shape != [target.rows, target.cols] {
            return Err(FcgError::shape(format!(
                "block `{}` {:?} does not fit `{name}` {}x{}",
                entry.name, entry.shape, target.rows, target.cols
            )));
        }
        let len = target.data.len();
        let src = values.get(entry.offset..entry.offset + len).ok_or_else(|| {
            FcgError::format(&params_path, format!("block `{name}` runs past the value count"))
        })?;
        for (dst, &v) in target.data.iter_mut().zip(src) {
            *dst = v as f64;
        }
    }
    Ok(bundle)
}
