//! Digital-twin loop: ingest observed frames, forecast the rest of the crack
//! and its remaining life, and re-forecast as observations accumulate.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::fracture::Point;
use crate::library::LibrarySample;
use crate::metrics::{life_accuracy, path_rmse, ssim};
use crate::model::ModelBundle;
use crate::raster::{polyline_length, trace_path, VoxelGrid};

pub const BINARY_THRESHOLD: f32 = 0.5;
pub const DEFAULT_T_OBS: [f64; 2] = [0.25, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifeMode {
    /// Life head evaluated on the last observed latent.
    #[default]
    LastObserved,
    /// Life head evaluated on the final rolled-out latent.
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub frame: VoxelGrid,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub issued_at: usize,
    /// Normalized latents emitted after the last observation.
    pub predicted_latents: Vec<Vec<f64>>,
    pub predicted_frames: Vec<VoxelGrid>,
    /// Last predicted frame, or the reconstruction of the last observed
    /// frame when nothing remains to forecast.
    pub terminal_frame: VoxelGrid,
    pub remaining_life: f64,
}

impl Prediction {
    /// Observed polyline extended by the traced terminal frame beyond the
    /// observed tip.
    pub fn predicted_path(&self, observed: &[Point]) -> Vec<Point> {
        let tip_x = observed.last().map_or(f64::NEG_INFINITY, |p| p.x);
        let mut out = observed.to_vec();
        out.extend(
            trace_path(&self.terminal_frame, BINARY_THRESHOLD)
                .into_iter()
                .filter(|p| p.x > tip_x),
        );
        out
    }
}

/// Append-only log of observations and the predictions issued after them.
#[derive(Debug, Clone)]
pub struct TwinSession {
    models: Arc<ModelBundle>,
    life_mode: LifeMode,
    observations: Vec<Observation>,
    latents: Vec<Vec<f64>>,
    predictions: Vec<Prediction>,
}

impl TwinSession {
    pub fn new(models: Arc<ModelBundle>) -> Self {
        Self::with_life_mode(models, LifeMode::default())
    }

    pub fn with_life_mode(models: Arc<ModelBundle>, life_mode: LifeMode) -> Self {
        TwinSession {
            models,
            life_mode,
            observations: Vec::new(),
            latents: Vec::new(),
            predictions: Vec::new(),
        }
    }

    pub fn models(&self) -> &ModelBundle {
        &self.models
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn predictions(&self) -> &[Prediction] {
        &self.predictions
    }

    pub fn latest(&self) -> Option<&Prediction> {
        self.predictions.last()
    }

    /// Record an observation without forecasting.
    pub fn ingest(&mut self, obs: Observation) -> Result<()> {
        let (rows, cols) = self.models.resolution();
        if obs.frame.rows != rows || obs.frame.cols != cols {
            return Err(FcgError::shape(format!(
                "observed grid {}x{} vs model resolution {rows}x{cols}",
                obs.frame.rows, obs.frame.cols
            )));
        }
        if let Some(prev) = self.observations.last() {
            if obs.step_index <= prev.step_index {
                return Err(FcgError::UnorderedObservation {
                    previous: prev.step_index,
                    got: obs.step_index,
                });
            }
        }
        let z = self.models.encode_frames(&[&obs.frame])?.remove(0);
        self.latents.push(z);
        self.observations.push(obs);
        Ok(())
    }

    /// Forecast from everything observed so far.
    pub fn predict(&mut self) -> Result<&Prediction> {
        let last = self
            .observations
            .last()
            .ok_or_else(|| FcgError::domain("no observations to predict from"))?;
        let m = &*self.models;
        let template = &last.frame;
        let horizon = m.horizon.saturating_sub(last.step_index);
        let limit = m.plate.crack_length_limit();
        let mut frames = Vec::new();
        let latents = m.seq.rollout(&self.latents, horizon, |z| {
            let frame = m.decode_normalized(z, template)?;
            let length = polyline_length(&trace_path(&frame, BINARY_THRESHOLD));
            frames.push(frame);
            Ok(length >= limit)
        })?;
        let terminal_frame = match frames.last() {
            Some(f) => f.clone(),
            None => m.decode_normalized(self.latents.last().unwrap(), template)?,
        };
        let life_latent = match (self.life_mode, latents.last()) {
            (LifeMode::Terminal, Some(z)) => z,
            _ => self.latents.last().unwrap(),
        };
        let remaining_life = m.life.predict(life_latent)?.max(0.0);
        self.predictions.push(Prediction {
            issued_at: last.step_index,
            predicted_latents: latents,
            predicted_frames: frames,
            terminal_frame,
            remaining_life,
        });
        Ok(self.predictions.last().unwrap())
    }
}

/// Ingest one observation and issue a fresh prediction.
pub fn twin_update(session: &mut TwinSession, obs: Observation) -> Result<&Prediction> {
    session.ingest(obs)?;
    session.predict()
}

/// Observation step for a fraction of a sample's frames.
pub fn t_obs_index(fraction: f64, n_frames: usize) -> usize {
    let last = n_frames.saturating_sub(1);
    ((fraction * last as f64).round() as usize).min(last)
}

/// Known-point count for the RMSE window: the observed share of the true
/// path's arc length, in resampled points.
pub fn known_points(observed: &[Point], truth: &[Point], n: usize) -> usize {
    let total = polyline_length(truth);
    if total <= 0.0 {
        return n;
    }
    let share = polyline_length(observed) / total;
    ((share * n as f64).ceil() as usize).clamp(1, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub sample_id: String,
    pub t_obs_fraction: f64,
    pub t_obs: usize,
    pub rmse: f64,
    pub ssim: f64,
    pub life_truth: f64,
    pub life_pred: f64,
    pub accuracy: f64,
    pub rare: bool,
}

/// Score a prediction issued at `t_obs` against the sample's ground truth.
pub fn score(pred: &Prediction, sample: &LibrarySample, t_obs: usize, n: usize) -> Result<(f64, f64)> {
    let observed = sample.path.polyline_to(t_obs);
    let truth = sample.path.polyline();
    let predicted = pred.predicted_path(&observed);
    let k = known_points(&observed, &truth, n);
    let rmse = path_rmse(&predicted, &truth, k, n)?;
    let final_frame = sample
        .frames
        .last()
        .ok_or_else(|| FcgError::domain("sample has no frames"))?;
    let s = ssim(&pred.terminal_frame, final_frame)?;
    Ok((rmse, s))
}

/// Replay every sample, issuing a prediction at each observation fraction
/// (ascending) within one self-correcting session per sample.
pub fn run_replay(
    models: Arc<ModelBundle>,
    samples: &[&LibrarySample],
    fractions: &[f64],
    n_resample: usize,
) -> Result<Vec<ReplayRow>> {
    if samples.is_empty() {
        return Err(FcgError::domain("replay needs at least one sample"));
    }
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(FcgError::config("evaluation.t_obs", "fractions must lie in [0, 1]"));
    }
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));
    let mut rows = Vec::with_capacity(samples.len() * fractions.len());
    for sample in samples {
        let mut session = TwinSession::new(models.clone());
        let mut fed = 0usize;
        let mut sample_rows = Vec::with_capacity(fractions.len());
        for &fi in &order {
            let t = t_obs_index(fractions[fi], sample.n_frames());
            while fed <= t {
                session.ingest(Observation {
                    frame: sample.frames[fed].clone(),
                    step_index: fed,
                })?;
                fed += 1;
            }
            let pred = match session.latest() {
                Some(p) if p.issued_at == t => p.clone(),
                _ => session.predict()?.clone(),
            };
            let (rmse, s) = score(&pred, sample, t, n_resample)?;
            sample_rows.push(ReplayRow {
                sample_id: sample.sample_id.clone(),
                t_obs_fraction: fractions[fi],
                t_obs: t,
                rmse,
                ssim: s,
                life_truth: sample.remaining_life[t],
                life_pred: pred.remaining_life,
                accuracy: f64::NAN,
                rare: sample.rare,
            });
        }
        let truth: Vec<f64> = sample_rows.iter().map(|r| r.life_truth).collect();
        let pred: Vec<f64> = sample_rows.iter().map(|r| r.life_pred).collect();
        for (row, acc) in sample_rows.iter_mut().zip(life_accuracy(&truth, &pred)?) {
            row.accuracy = acc;
        }
        rows.extend(sample_rows);
    }
    Ok(rows)
}

/// Mean of `metric` over rows at one observation fraction.
pub fn mean_at(rows: &[ReplayRow], fraction: f64, metric: impl Fn(&ReplayRow) -> f64) -> Option<f64> {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| (r.t_obs_fraction - fraction).abs() < 1e-12)
        .map(metric)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    sample_id: &'a str,
    t_obs_fraction: f64,
    rmse: f64,
    ssim: f64,
    life_truth: f64,
    life_pred: f64,
    accuracy: f64,
    config_hash: &'a str,
}

pub fn write_replay_csv(rows: &[ReplayRow], path: &Path, config_hash: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| FcgError::io(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(CsvRow {
            sample_id: &r.sample_id,
            t_obs_fraction: r.t_obs_fraction,
            rmse: r.rmse,
            ssim: r.ssim,
            life_truth: r.life_truth,
            life_pred: r.life_pred,
            accuracy: r.accuracy,
            config_hash,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| FcgError::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> FcgError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => FcgError::io(path, io),
        other => FcgError::format(path, format!("{other:?}")),
    }
}
