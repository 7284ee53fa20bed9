//! Command-line front end: `generate`, `train`, `predict`, `evaluate`,
//! `complexity`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ToolkitConfig;
use crate::container::{read_file, write_file};
use crate::error::{FcgError, Result};
use crate::library::{generate_library, load_library, save_library, Library, LibrarySample};
use crate::model::{load_bundle, save_bundle, train_stack_with, ModelBundle};
use crate::sax::{data_complexity, paa, sax_discretize};
use crate::svg::{line_chart, path_overlay};
use crate::twin::{
    mean_at, run_replay, score, t_obs_index, write_replay_csv, csv_error, Observation, TwinSession,
};

#[derive(Debug, Parser)]
#[command(name = "fcg", version, about = "Fatigue crack growth libraries, surrogate training and digital-twin prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML configuration file; defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long = "t-obs", global = true)]
    pub t_obs: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long = "n-slices", global = true)]
    pub n_slices: Option<usize>,
    /// Train the sequence model without rare-sample re-weighting.
    #[arg(long = "no-reweight", global = true)]
    pub no_reweight: bool,
    /// Train the sequence model on an unsliced companion library.
    #[arg(long = "no-slicing", global = true)]
    pub no_slicing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a crack library.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Overrides `library.n_samples`.
        #[arg(long)]
        n_samples: Option<usize>,
    },
    /// Train the model bundle on a library's training split.
    Train {
        library: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Predict one library sample from its first frames.
    Predict {
        bundle: PathBuf,
        #[arg(long)]
        library: PathBuf,
        /// Sample id; defaults to the first test sample.
        #[arg(long)]
        sample: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Replay the test split and tabulate RMSE, SSIM and life accuracy.
    Evaluate {
        bundle: PathBuf,
        #[arg(long)]
        library: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// SAX word and data complexity of a load profile.
    Complexity {
        /// CSV whose last column holds the profile values.
        profile: PathBuf,
        #[arg(short, long)]
        w: usize,
        #[arg(short, long)]
        l: usize,
    },
}

/// Configuration after applying command-line overrides, validated.
pub fn resolve_config(common: &Common) -> Result<ToolkitConfig> {
    let mut cfg = match &common.config {
        Some(path) => ToolkitConfig::load(path)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.library.seed = seed;
    }
    if let Some(n) = common.n_slices {
        cfg.slicing.n_slices = n;
    }
    if let Some(lambda) = common.lambda {
        cfg.training.lambda = lambda;
    }
    if let Some(t) = common.t_obs {
        cfg.evaluation.t_obs = vec![t];
    }
    if common.no_reweight {
        cfg.training.reweight = false;
    }
    if common.no_slicing {
        cfg.training.slicing = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(common: &Common, fallback: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_file(path, text.as_bytes())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| FcgError::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FcgError::io(path, e))
}

pub fn cmd_generate(common: &Common, n_samples: Option<usize>) -> Result<Library> {
    let mut cfg = resolve_config(common)?;
    if let Some(n) = n_samples {
        cfg.library.n_samples = n;
        cfg.validate()?;
    }
    let mut lib = generate_library(cfg.library.n_samples, &cfg.library_spec(), cfg.library.seed)?;
    lib.config_hash = cfg.hash();
    let out = out_dir(common, "library");
    save_library(&lib, &out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    println!(
        "samples {} (train {}, test {}), rare fraction {:.4}, mean life {:.1} cycles, config {}",
        lib.samples.len(),
        lib.split.train.len(),
        lib.split.test.len(),
        lib.rare_fraction(),
        lib.mean_life(),
        lib.config_hash
    );
    Ok(lib)
}

#[derive(Serialize)]
struct LossRow<'a> {
    stage: &'a str,
    epoch: usize,
    loss: f64,
    config_hash: &'a str,
}

pub fn cmd_train(library: &Path, common: &Common) -> Result<ModelBundle> {
    let cfg = resolve_config(common)?;
    let lib = load_library(library)?;
    let seed = common.seed.unwrap_or(lib.seed);
    let (mut bundle, report) = train_stack_with(&lib, &cfg.stack_config(), seed, cfg.training.slicing)?;
    bundle.config_hash = cfg.hash();
    let out = out_dir(common, "model");
    save_bundle(&bundle, &out)?;
    let hash = bundle.config_hash.as_str();
    let mut rows = Vec::new();
    for (stage, trace) in [("vae", &report.vae_loss), ("seq", &report.seq_loss), ("life", &report.life_loss)] {
        rows.extend(trace.iter().enumerate().map(|(epoch, &loss)| LossRow {
            stage,
            epoch,
            loss,
            config_hash: hash,
        }));
    }
    write_rows(&out.join("losses.csv"), &rows)?;
    println!(
        "final losses: vae {:.6}, seq {:.6}, life {:.6}; rare training samples {}/{}; config {hash}",
        report.vae_loss.last().copied().unwrap_or(f64::NAN),
        report.seq_loss.last().copied().unwrap_or(f64::NAN),
        report.life_loss.last().copied().unwrap_or(f64::NAN),
        report.rare.iter().filter(|r| **r).count(),
        report.rare.len()
    );
    Ok(bundle)
}

fn check_resolution(bundle: &ModelBundle, lib: &Library) -> Result<()> {
    if bundle.resolution() != (lib.spec.rows, lib.spec.cols) {
        return Err(FcgError::shape(format!(
            "model expects {:?} grids, library holds {}x{}",
            bundle.resolution(),
            lib.spec.rows,
            lib.spec.cols
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PathRow<'a> {
    source: &'a str,
    index: usize,
    x: f64,
    y: f64,
    config_hash: &'a str,
}

#[derive(Serialize)]
struct PredictionSummary<'a> {
    sample_id: &'a str,
    t_obs_fraction: f64,
    t_obs: usize,
    predicted_frames: usize,
    rmse: f64,
    ssim: f64,
    life_truth: f64,
    life_pred: f64,
    config_hash: &'a str,
}

pub fn cmd_predict(bundle_dir: &Path, library: &Path, sample: Option<&str>, common: &Common) -> Result<(f64, f64)> {
    let cfg = resolve_config(common)?;
    let bundle = Arc::new(load_bundle(bundle_dir)?);
    let lib = load_library(library)?;
    check_resolution(&bundle, &lib)?;
    let id = match sample {
        Some(id) => id.to_string(),
        None => lib
            .split
            .test
            .first()
            .cloned()
            .ok_or_else(|| FcgError::domain("library has no test samples"))?,
    };
    let s: &LibrarySample = lib
        .sample(&id)
        .ok_or_else(|| FcgError::domain(format!("no sample `{id}` in the library")))?;
    let fraction = common.t_obs.unwrap_or(*cfg.evaluation.t_obs.last().unwrap());
    let t = t_obs_index(fraction, s.n_frames());
    let mut session = TwinSession::new(bundle.clone());
    for (i, frame) in s.frames[..=t].iter().enumerate() {
        session.ingest(Observation {
            frame: frame.clone(),
            step_index: i,
        })?;
    }
    let pred = session.predict()?.clone();
    let (rmse, ssim) = score(&pred, s, t, cfg.evaluation.resample_points)?;
    let observed = s.path.polyline_to(t);
    let truth = s.path.polyline();
    let predicted = pred.predicted_path(&observed);

    let hash = bundle.config_hash.as_str();
    let out = out_dir(common, "prediction");
    let mut rows = Vec::new();
    for (source, pts) in [("truth", &truth), ("observed", &observed), ("predicted", &predicted)] {
        rows.extend(pts.iter().enumerate().map(|(index, p)| PathRow {
            source,
            index,
            x: p.x,
            y: p.y,
            config_hash: hash,
        }));
    }
    write_rows(&out.join("paths.csv"), &rows)?;
    write_rows(
        &out.join("prediction.csv"),
        &[PredictionSummary {
            sample_id: &id,
            t_obs_fraction: fraction,
            t_obs: t,
            predicted_frames: pred.predicted_frames.len(),
            rmse,
            ssim,
            life_truth: s.remaining_life[t],
            life_pred: pred.remaining_life,
            config_hash: hash,
        }],
    )?;
    write_text(
        &out.join("overlay.svg"),
        &path_overlay(&bundle.plate, &truth, &observed, &predicted, hash),
    )?;
    println!(
        "{id} at step {t}: rmse {rmse:.6e} m, ssim {ssim:.4}, remaining life {:.0} (truth {:.0}) cycles",
        pred.remaining_life, s.remaining_life[t]
    );
    Ok((rmse, ssim))
}

pub fn cmd_evaluate(bundle_dir: &Path, library: &Path, common: &Common) -> Result<usize> {
    let cfg = resolve_config(common)?;
    let bundle = Arc::new(load_bundle(bundle_dir)?);
    let lib = load_library(library)?;
    check_resolution(&bundle, &lib)?;
    let test = lib.test_samples();
    let fractions = &cfg.evaluation.t_obs;
    let rows = run_replay(bundle.clone(), &test, fractions, cfg.evaluation.resample_points)?;
    let hash = bundle.config_hash.as_str();
    let out = out_dir(common, "evaluation");
    write_replay_csv(&rows, &out.join("replay.csv"), hash)?;

    let mut sorted = fractions.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let curve = |metric: fn(&crate::twin::ReplayRow) -> f64| -> Vec<(f64, f64)> {
        sorted
            .iter()
            .filter_map(|&f| mean_at(&rows, f, metric).map(|m| (f, m)))
            .collect()
    };
    let ssim_curve = curve(|r| r.ssim);
    let rmse_curve = curve(|r| r.rmse);
    write_text(
        &out.join("summary_ssim.svg"),
        &line_chart("mean SSIM vs observed fraction", "t_obs", &[("ssim".into(), ssim_curve.clone())], hash),
    )?;
    write_text(
        &out.join("summary_rmse.svg"),
        &line_chart("mean path RMSE [m] vs observed fraction", "t_obs", &[("rmse".into(), rmse_curve.clone())], hash),
    )?;
    for ((f, s), (_, r)) in ssim_curve.iter().zip(&rmse_curve) {
        println!("t_obs {f:.2}: mean ssim {s:.4}, mean rmse {r:.6e} m");
    }
    println!("{} rows written, config {hash}", rows.len());
    Ok(rows.len())
}

/// Numbers from the last column of a CSV; non-numeric cells (a header) are
/// skipped.
pub fn read_profile(path: &Path) -> Result<Vec<f64>> {
    let bytes = read_file(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if let Some(v) = rec.iter().next_back().and_then(|c| c.trim().parse::<f64>().ok()) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(FcgError::format(path, "no numeric values in the profile"));
    }
    Ok(out)
}

pub fn cmd_complexity(profile: &Path, w: usize, l: usize) -> Result<String> {
    let series = read_profile(profile)?;
    let word = sax_discretize(&paa(&series, w)?, l)?;
    let complexity = data_complexity(w, l)?;
    let line = format!("word {word}\ncomplexity {complexity}");
    println!("{line}");
    Ok(line)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, n_samples } => cmd_generate(&common, n_samples).map(|_| ()),
        Command::Train { library, common } => cmd_train(&library, &common).map(|_| ()),
        Command::Predict {
            bundle,
            library,
            sample,
            common,
        } => cmd_predict(&bundle, &library, sample.as_deref(), &common).map(|_| ()),
        Command::Evaluate { bundle, library, common } => cmd_evaluate(&bundle, &library, &common).map(|_| ()),
        Command::Complexity { profile, w, l } => cmd_complexity(&profile, w, l).map(|_| ()),
    }
}
