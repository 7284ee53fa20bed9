//! Digital libraries of simulated crack patterns.
//!
//! A library directory holds `manifest.json` and one `samples/<id>.bin`
//! blob per sample:
//!
//! ```text
//! "FCGL" | u32 version | u32 rows | u32 cols | u32 n_frames
//! n_frames * rows * cols f32 occupancy values (row-major, frame-major)
//! n_frames f32 remaining-life values
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{mix_seed, read_file, sha256_hex, write_file, BlobReader, BlobWriter};
use crate::error::{FcgError, Result};
use crate::fracture::{simulate_fcg, CrackPath, MaterialSpec, PlateSpec};
use crate::loads::{build_schedule, LoadSchedule, NoiseSpec};
use crate::raster::{rasterize, VoxelGrid};

pub const LIBRARY_MAGIC: &[u8; 4] = b"FCGL";
pub const LIBRARY_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TEST_FRACTION: f64 = 0.20;
pub const MIN_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LibrarySpec {
    pub plate: PlateSpec,
    pub material: MaterialSpec,
    pub noise: NoiseSpec,
    pub n_slices: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Default for LibrarySpec {
    fn default() -> Self {
        LibrarySpec {
            plate: PlateSpec::default(),
            material: MaterialSpec::default(),
            noise: NoiseSpec::default(),
            n_slices: 5,
            rows: 64,
            cols: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibrarySample {
    pub sample_id: String,
    pub schedule: LoadSchedule,
    pub path: CrackPath,
    pub frames: Vec<VoxelGrid>,
    pub remaining_life: Vec<f64>,
    pub rare: bool,
}

impl LibrarySample {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub spec: LibrarySpec,
    pub seed: u64,
    pub config_hash: String,
    pub samples: Vec<LibrarySample>,
    pub split: Split,
}

impl Library {
    pub fn sample(&self, id: &str) -> Option<&LibrarySample> {
        self.samples.iter().find(|s| s.sample_id == id)
    }

    fn subset<'a>(&'a self, ids: &'a [String]) -> impl Iterator<Item = &'a LibrarySample> + 'a {
        ids.iter().filter_map(move |id| self.sample(id))
    }

    pub fn train_samples(&self) -> Vec<&LibrarySample> {
        self.subset(&self.split.train).collect()
    }

    pub fn test_samples(&self) -> Vec<&LibrarySample> {
        self.subset(&self.split.test).collect()
    }

    pub fn rare_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.rare).count() as f64 / self.samples.len() as f64
    }

    pub fn mean_life(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.path.total_life).sum::<f64>() / self.samples.len() as f64
    }
}

pub fn sample_id(index: usize) -> String {
    format!("s{index:05}")
}

/// Analytic probability that a single Gaussian draw lands in the rare tail.
pub fn per_sample_rare_probability(p_slice_component: f64, n_slices: usize) -> f64 {
    1.0 - (1.0 - p_slice_component).powi(2 * n_slices as i32)
}

/// Simulate one sample from its schedule.
pub fn build_sample(id: String, spec: &LibrarySpec, schedule: LoadSchedule) -> Result<LibrarySample> {
    let path = simulate_fcg(&spec.plate, &spec.material, &schedule)?;
    let frames = (0..path.points.len())
        .map(|t| rasterize(&path, t, &spec.plate, spec.rows, spec.cols))
        .collect::<Result<Vec<_>>>()?;
    let remaining_life = path.remaining_life();
    Ok(LibrarySample {
        sample_id: id,
        rare: schedule.is_rare(),
        schedule,
        path,
        frames,
        remaining_life,
    })
}

pub fn generate_library(n_samples: usize, spec: &LibrarySpec, seed: u64) -> Result<Library> {
    if n_samples < MIN_SAMPLES {
        return Err(FcgError::config(
            "library.n_samples",
            format!("must be >= {MIN_SAMPLES}"),
        ));
    }
    spec.plate.validate()?;
    spec.material.validate()?;
    spec.noise.validate()?;
    if spec.n_slices == 0 {
        return Err(FcgError::config("slicing.n_slices", "must be >= 1"));
    }
    let max_failures = n_samples / 10;
    let mut failures = 0usize;
    let mut samples = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut attempt = 0u64;
        loop {
            let child = mix_seed(seed, i as u64, attempt);
            let outcome = build_schedule(&spec.noise, spec.n_slices, spec.plate.width, child)
                .and_then(|sched| build_sample(sample_id(i), spec, sched));
            match outcome {
                Ok(s) => {
                    samples.push(s);
                    break;
                }
                Err(_) => {
                    failures += 1;
                    attempt += 1;
                    if failures > max_failures {
                        return Err(FcgError::TooManyFailures {
                            failed: failures,
                            attempted: i + 1 + failures,
                        });
                    }
                }
            }
        }
    }
    let split = split_ids(&samples, seed);
    Ok(Library {
        spec: *spec,
        seed,
        config_hash: String::new(),
        samples,
        split,
    })
}

fn split_ids(samples: &[LibrarySample], seed: u64) -> Split {
    let mut ids: Vec<String> = samples.iter().map(|s| s.sample_id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX, 0));
    ids.shuffle(&mut rng);
    let n_test = (TEST_FRACTION * ids.len() as f64).floor() as usize;
    let mut test: Vec<String> = ids[..n_test].to_vec();
    let mut train: Vec<String> = ids[n_test..].to_vec();
    test.sort();
    train.sort();
    Split { train, test }
}

/// The same sample ids, seed and split, drawn with one load slice over the
/// whole plate.
pub fn unsliced_companion(lib: &Library) -> Result<Library> {
    let spec = LibrarySpec {
        n_slices: 1,
        ..lib.spec
    };
    let mut out = generate_library(lib.samples.len(), &spec, lib.seed)?;
    out.config_hash = lib.config_hash.clone();
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    config_hash: String,
    seed: u64,
    spec: LibrarySpec,
    split: Split,
    samples: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    sample_id: String,
    file: String,
    sha256: String,
    n_frames: usize,
    rare: bool,
    schedule: LoadSchedule,
    path: CrackPath,
}

fn sample_file(id: &str) -> String {
    format!("samples/{id}.bin")
}

fn encode_sample(sample: &LibrarySample, rows: usize, cols: usize) -> Vec<u8> {
    let mut w = BlobWriter::new();
    w.magic(LIBRARY_MAGIC)
        .u32(LIBRARY_VERSION)
        .u32(rows as u32)
        .u32(cols as u32)
        .u32(sample.frames.len() as u32);
    for f in &sample.frames {
        w.f32s(f.values.iter().copied());
    }
    w.f32s(sample.remaining_life.iter().map(|&v| v as f32));
    w.finish()
}

/// Write `lib` under `dir`. Output bytes depend only on the library contents.
pub fn save_library(lib: &Library, dir: &Path) -> Result<()> {
    let mut entries = Vec::with_capacity(lib.samples.len());
    for s in &lib.samples {
        let bytes = encode_sample(s, lib.spec.rows, lib.spec.cols);
        let file = sample_file(&s.sample_id);
        write_file(&dir.join(&file), &bytes)?;
        entries.push(ManifestEntry {
            sample_id: s.sample_id.clone(),
            file,
            sha256: sha256_hex(&bytes),
            n_frames: s.frames.len(),
            rare: s.rare,
            schedule: s.schedule.clone(),
            path: s.path.clone(),
        });
    }
    let manifest = Manifest {
        format: "FCGL".into(),
        version: LIBRARY_VERSION,
        config_hash: lib.config_hash.clone(),
        seed: lib.seed,
        spec: lib.spec,
        split: lib.split.clone(),
        samples: entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST_FILE), &json)
}

pub fn load_library(dir: &Path) -> Result<Library> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let raw = read_file(&manifest_path)?;
    let manifest: Manifest = serde_json::from_slice(&raw)
        .map_err(|e| FcgError::format(&manifest_path, e.to_string()))?;
    if manifest.version != LIBRARY_VERSION {
        return Err(FcgError::VersionMismatch {
            path: manifest_path,
            found: manifest.version,
            expected: LIBRARY_VERSION,
        });
    }
    let spec = manifest.spec;
    let mut samples = Vec::with_capacity(manifest.samples.len());
    for entry in manifest.samples {
        let path = dir.join(&entry.file);
        if !path.exists() {
            return Err(FcgError::MissingPart {
                sample_id: entry.sample_id,
                path,
            });
        }
        let bytes = read_file(&path)?;
        samples.push(decode_sample(&bytes, &path, entry, &spec)?);
    }
    validate_split(&manifest.split, &samples, &manifest_path)?;
    Ok(Library {
        spec,
        seed: manifest.seed,
        config_hash: manifest.config_hash,
        samples,
        split: manifest.split,
    })
}

fn decode_sample(
    bytes: &[u8],
    path: &PathBuf,
    entry: ManifestEntry,
    spec: &LibrarySpec,
) -> Result<LibrarySample> {
    let mut r = BlobReader::new(bytes, path);
    r.expect_magic(LIBRARY_MAGIC)?;
    let version = r.u32("version")?;
    if version != LIBRARY_VERSION {
        return Err(FcgError::VersionMismatch {
            path: path.clone(),
            found: version,
            expected: LIBRARY_VERSION,
        });
    }
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    let n_frames = r.u32("n_frames")? as usize;
    if rows != spec.rows || cols != spec.cols || n_frames != entry.n_frames {
        return Err(FcgError::format(
            path,
            format!(
                "header {rows}x{cols}x{n_frames} disagrees with manifest {}x{}x{}",
                spec.rows, spec.cols, entry.n_frames
            ),
        ));
    }
    r.require_f32s(n_frames * rows * cols + n_frames, "frame and life payload")?;
    if sha256_hex(bytes) != entry.sha256 {
        return Err(FcgError::Checksum { path: path.clone() });
    }
    let template = VoxelGrid::empty(&spec.plate, rows, cols);
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let values = r.f32s(rows * cols, &format!("frame {t}"))?;
        frames.push(VoxelGrid {
            values,
            ..template.clone()
        });
    }
    let stored_life = r.f32s(n_frames, "remaining life")?;
    if r.remaining() != 0 {
        return Err(FcgError::format(path, "trailing bytes after payload"));
    }
    let remaining_life = entry.path.remaining_life();
    if remaining_life.len() != n_frames
        || remaining_life
            .iter()
            .zip(&stored_life)
            .any(|(&exact, &stored)| exact as f32 != stored)
    {
        return Err(FcgError::format(
            path,
            "stored remaining life disagrees with the manifest path",
        ));
    }
    Ok(LibrarySample {
        sample_id: entry.sample_id,
        schedule: entry.schedule,
        path: entry.path,
        frames,
        remaining_life,
        rare: entry.rare,
    })
}

fn validate_split(split: &Split, samples: &[LibrarySample], path: &Path) -> Result<()> {
    let all: BTreeSet<&str> = samples.iter().map(|s| s.sample_id.as_str()).collect();
    let train: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
    let test: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
    let union: BTreeSet<&str> = train.union(&test).copied().collect();
    if !train.is_disjoint(&test) || union != all {
        return Err(FcgError::format(
            path,
            "train/test split is not a partition of the sample ids",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_spec() -> LibrarySpec {
        LibrarySpec {
            noise: NoiseSpec {
                tension_std: 0.0,
                shear_std: 0.0,
                ..NoiseSpec::default()
            },
            rows: 16,
            cols: 16,
            ..LibrarySpec::default()
        }
    }

    #[test]
    fn noise_free_library_is_uniform() {
        let lib = generate_library(10, &quiet_spec(), 3).unwrap();
        assert_eq!(lib.samples.len(), 10);
        let first = &lib.samples[0];
        for s in &lib.samples[1..] {
            assert_eq!(s.frames, first.frames);
            assert_eq!(s.remaining_life, first.remaining_life);
        }
        assert_eq!(lib.split.test.len(), 2);
        assert_eq!(lib.split.train.len(), 8);
    }

    #[test]
    fn life_bookkeeping_is_exact() {
        let spec = LibrarySpec {
            rows: 16,
            cols: 16,
            ..LibrarySpec::default()
        };
        let lib = generate_library(8, &spec, 11).unwrap();
        for s in &lib.samples {
            assert_eq!(s.frames.len(), s.remaining_life.len());
            for t in 0..s.frames.len() {
                assert_eq!(s.remaining_life[t] + s.path.elapsed_at(t), s.path.total_life);
            }
            assert_eq!(*s.remaining_life.last().unwrap(), 0.0);
            assert!(s.remaining_life.windows(2).all(|w| w[1] < w[0]));
            let counts: Vec<usize> = s.frames.iter().map(|f| f.occupied()).collect();
            assert!(counts.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(generate_library(4, &quiet_spec(), 0).is_err());
    }

    #[test]
    fn unpropagating_loads_abort() {
        let spec = LibrarySpec {
            noise: NoiseSpec {
                tension_mean: 0.0,
                tension_std: 0.0,
                shear_std: 0.0,
                ..NoiseSpec::default()
            },
            ..quiet_spec()
        };
        assert!(matches!(
            generate_library(10, &spec, 0),
            Err(FcgError::TooManyFailures { .. })
        ));
    }

    #[test]
    fn rare_probability_formula() {
        let p = per_sample_rare_probability(0.0144, 5);
        assert!((p - (1.0 - 0.9856f64.powi(10))).abs() < 1e-15);
    }
}
