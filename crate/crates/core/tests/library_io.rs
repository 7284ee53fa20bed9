use std::fs;
use std::path::Path;

use fcg_core::library::{generate_library, load_library, per_sample_rare_probability, save_library, LibrarySpec};
use fcg_core::loads::{build_schedule, NoiseSpec};
use fcg_core::FcgError;

fn small_spec() -> LibrarySpec {
    LibrarySpec {
        rows: 16,
        cols: 16,
        ..LibrarySpec::default()
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Φ(−t) by Simpson integration of the standard normal density.
fn normal_tail(t: f64) -> f64 {
    let n = 2000;
    let h = t / n as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(0.0) + phi(t);
    for i in 1..n {
        s += phi(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 - s * h / 3.0
}

#[test]
fn round_trip_preserves_every_sample() {
    let lib = generate_library(10, &small_spec(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_library(&lib, dir.path()).unwrap();
    let back = load_library(dir.path()).unwrap();
    assert_eq!(back, lib);
    assert_eq!(back.split.test.len(), 2);
    assert_eq!(back.split.train.len(), 8);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    save_library(&generate_library(10, &small_spec(), 9).unwrap(), a.path()).unwrap();
    save_library(&generate_library(10, &small_spec(), 9).unwrap(), b.path()).unwrap();
    assert_eq!(files(a.path()), files(b.path()));

    let c = tempfile::tempdir().unwrap();
    save_library(&generate_library(10, &small_spec(), 10).unwrap(), c.path()).unwrap();
    assert_ne!(files(a.path()), files(c.path()));
}

fn saved() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    save_library(&generate_library(6, &small_spec(), 1).unwrap(), dir.path()).unwrap();
    dir
}

#[test]
fn flipped_byte_fails_checksum() {
    let dir = saved();
    let p = dir.path().join("samples/s00002.bin");
    let mut bytes = fs::read(&p).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x55;
    fs::write(&p, bytes).unwrap();
    let err = load_library(dir.path()).unwrap_err();
    assert!(matches!(err, FcgError::Checksum { .. }), "{err}");
    assert_eq!(err.exit_code(), 5);
}

#[test]
fn short_file_is_truncated() {
    let dir = saved();
    let p = dir.path().join("samples/s00000.bin");
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 10]).unwrap();
    let err = load_library(dir.path()).unwrap_err();
    assert!(matches!(err, FcgError::Truncated { .. }), "{err}");
}

#[test]
fn deleted_sample_names_the_sample() {
    let dir = saved();
    fs::remove_file(dir.path().join("samples/s00004.bin")).unwrap();
    match load_library(dir.path()).unwrap_err() {
        FcgError::MissingPart { sample_id, .. } => assert_eq!(sample_id, "s00004"),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn future_version_is_rejected() {
    let dir = saved();
    let p = dir.path().join("manifest.json");
    let text = fs::read_to_string(&p).unwrap().replacen("\"version\": 1", "\"version\": 7", 1);
    fs::write(&p, text).unwrap();
    let err = load_library(dir.path()).unwrap_err();
    assert!(matches!(err, FcgError::VersionMismatch { found: 7, expected: 1, .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn blob_version_is_checked_too() {
    let dir = saved();
    let p = dir.path().join("samples/s00001.bin");
    let mut bytes = fs::read(&p).unwrap();
    bytes[4] = 2;
    fs::write(&p, bytes).unwrap();
    assert!(matches!(load_library(dir.path()).unwrap_err(), FcgError::VersionMismatch { found: 2, .. }));
}

#[test]
fn tail_draws_match_the_normal_oracle() {
    let noise = NoiseSpec::default();
    let t = noise.tail_threshold();
    let mut rare = 0usize;
    let mut total = 0usize;
    for seed in 0..5000u64 {
        let s = build_schedule(&noise, 1, 0.01, seed).unwrap();
        for (v, mean, std) in [
            (s.tensions[0], noise.tension_mean, noise.tension_std),
            (s.shears[0], noise.shear_mean, noise.shear_std),
        ] {
            total += 1;
            if ((v - mean) / std).abs() > t {
                rare += 1;
            }
        }
    }
    let expected = 2.0 * normal_tail(t);
    assert!((expected - 0.0144).abs() < 1e-4);
    let observed = rare as f64 / total as f64;
    assert!((observed - expected).abs() < 0.004, "{observed} vs {expected}");
}

#[test]
fn rare_fraction_tracks_the_per_sample_probability() {
    let lib = generate_library(1000, &small_spec(), 21).unwrap();
    let p_slice = 2.0 * normal_tail(NoiseSpec::default().tail_threshold());
    let expected = 1.0 - (1.0 - p_slice).powi(10);
    assert!((per_sample_rare_probability(p_slice, 5) - expected).abs() < 1e-12);
    let got = lib.rare_fraction();
    assert!(got >= 0.5 * expected && got <= 2.0 * expected, "{got} vs {expected}");
}
