use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"
[library]
rows = 16
cols = 16

[training]
vae_epochs = 2
seq_epochs = 2
life_epochs = 2
"#;

fn fcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcg")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn quick_config(dir: &Path) -> String {
    let p = dir.join("quick.toml");
    fs::write(&p, QUICK).unwrap();
    p.to_str().unwrap().to_string()
}

fn generate(dir: &Path, name: &str, n: usize, seed: u64) -> std::path::PathBuf {
    let cfg = quick_config(dir);
    let out = dir.join(name);
    let n = n.to_string();
    let seed = seed.to_string();
    ok(fcg(&[
        "generate", "--config", &cfg, "--n-samples", &n, "--seed", &seed, "--out", s(&out),
    ]));
    out
}

#[test]
fn generate_splits_four_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let out = dir.path().join("lib");
    let stdout = ok(fcg(&["generate", "--config", &cfg, "--n-samples", "50", "--out", s(&out)]));
    assert!(stdout.contains("samples 50 (train 40, test 10)"), "{stdout}");
    assert!(out.join("manifest.json").is_file());
    assert!(out.join("config.toml").is_file());
}

#[test]
fn same_seed_gives_the_same_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a", 8, 5);
    let b = generate(dir.path(), "b", 8, 5);
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
}

#[test]
fn zero_slices_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fcg(&["generate", "--n-slices", "0", "--out", s(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("slicing.n_slices"), "{err}");
    assert!(err.starts_with("error[config]"), "{err}");
}

#[test]
fn missing_library_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fcg(&["train", s(&dir.path().join("nowhere"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn constant_profile_complexity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("profile.csv");
    let mut text = String::from("x,value\n");
    for i in 0..20 {
        text.push_str(&format!("{i},3.5\n"));
    }
    fs::write(&p, text).unwrap();
    let stdout = ok(fcg(&["complexity", s(&p), "-w", "1", "-l", "10"]));
    assert!(stdout.contains("complexity 10\n"), "{stdout}");

    let stdout = ok(fcg(&["complexity", s(&p), "-w", "4", "-l", "10"]));
    assert!(stdout.contains("complexity 10000\n"), "{stdout}");
}

#[test]
fn train_evaluate_and_predict_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let lib = generate(dir.path(), "lib", 15, 3);
    let model = dir.path().join("model");
    ok(fcg(&["train", s(&lib), "--config", &cfg, "--out", s(&model)]));
    assert!(model.join("losses.csv").is_file());

    let eval = dir.path().join("eval");
    let stdout = ok(fcg(&[
        "evaluate", s(&model), "--library", s(&lib), "--config", &cfg, "--out", s(&eval),
    ]));
    // 3 test samples times the two default observation fractions
    let csv = fs::read_to_string(eval.join("replay.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2, "{csv}");
    assert!(stdout.contains("6 rows written"), "{stdout}");
    assert!(eval.join("summary_ssim.svg").is_file());

    let pred = dir.path().join("pred");
    ok(fcg(&[
        "predict", s(&model), "--library", s(&lib), "--config", &cfg, "--t-obs", "1", "--out", s(&pred),
    ]));
    let summary = fs::read_to_string(pred.join("prediction.csv")).unwrap();
    let mut rows = summary.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let row: Vec<&str> = rows.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    // fully observed: the last frame is the end of life
    assert_eq!(col("t_obs_fraction").parse::<f64>().unwrap(), 1.0);
    assert_eq!(col("life_truth").parse::<f64>().unwrap(), 0.0);
    assert!(pred.join("overlay.svg").is_file());
}
