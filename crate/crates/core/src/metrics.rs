//! Path RMSE, global SSIM and life-prediction accuracy.

use serde::Serialize;

use crate::error::{FcgError, Result};
use crate::fracture::Point;
use crate::raster::VoxelGrid;

/// Number of arc-length samples used to align paths before comparing them.
pub const DEFAULT_RESAMPLE_POINTS: usize = 100;

/// Voxel value range for binary occupancy grids.
pub const VOXEL_RANGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub rmse: f64,
    pub ssim: f64,
    pub life_accuracy: f64,
}

/// `n` points spaced evenly by arc length, endpoints included.
pub fn resample(polyline: &[Point], n: usize) -> Result<Vec<Point>> {
    if polyline.is_empty() {
        return Err(FcgError::domain("cannot resample an empty polyline"));
    }
    if n == 0 {
        return Err(FcgError::domain("resample count must be >= 1"));
    }
    let mut cumulative = Vec::with_capacity(polyline.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in polyline.windows(2) {
        acc += w[0].distance(&w[1]);
        cumulative.push(acc);
    }
    let total = acc;
    if n == 1 || total == 0.0 {
        let p = if n == 1 { *polyline.last().unwrap() } else { polyline[0] };
        return Ok(vec![p; n]);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < s {
            seg += 1;
        }
        let (s0, s1) = (cumulative[seg], cumulative[seg + 1]);
        let t = if s1 > s0 { ((s - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (polyline[seg], polyline[seg + 1]);
        out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    Ok(out)
}

/// RMSE over the unknown points `k..=n` (1-based) of two aligned point lists.
pub fn rmse_aligned(pred: &[Point], truth: &[Point], k: usize) -> Result<f64> {
    let n = truth.len();
    if pred.len() != n {
        return Err(FcgError::shape(format!(
            "{} predicted points vs {n} true points",
            pred.len()
        )));
    }
    if k == 0 || k > n {
        return Err(FcgError::domain(format!("known-point count {k} outside [1, {n}]")));
    }
    let sum: f64 = pred[k - 1..]
        .iter()
        .zip(&truth[k - 1..])
        .map(|(p, t)| {
            let (dx, dy) = (p.x - t.x, p.y - t.y);
            dx * dx + dy * dy
        })
        .sum();
    Ok((sum / (n - k + 1) as f64).sqrt())
}

/// Resample both polylines to `n` points and evaluate RMSE over points `k..=n`.
pub fn path_rmse(pred: &[Point], truth: &[Point], k: usize, n: usize) -> Result<f64> {
    if k > n {
        return Err(FcgError::domain(format!("known-point count {k} exceeds {n}")));
    }
    rmse_aligned(&resample(pred, n)?, &resample(truth, n)?, k)
}

/// Single-window SSIM with population statistics and R = 1.
pub fn ssim_values(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(FcgError::shape(format!(
            "SSIM needs equal non-empty inputs, got {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len() as f64;
    let mu_p = pred.iter().sum::<f64>() / n;
    let mu_t = truth.iter().sum::<f64>() / n;
    let (mut var_p, mut var_t, mut cov) = (0.0, 0.0, 0.0);
    for (&p, &t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mu_p, t - mu_t);
        var_p += dp * dp;
        var_t += dt * dt;
        cov += dp * dt;
    }
    var_p /= n;
    var_t /= n;
    cov /= n;
    let c1 = (0.01 * VOXEL_RANGE).powi(2);
    let c2 = (0.03 * VOXEL_RANGE).powi(2);
    Ok(((2.0 * mu_p * mu_t + c1) * (2.0 * cov + c2))
        / ((mu_p * mu_p + mu_t * mu_t + c1) * (var_p + var_t + c2)))
}

pub fn ssim(pred: &VoxelGrid, truth: &VoxelGrid) -> Result<f64> {
    if !pred.same_shape(truth) {
        return Err(FcgError::shape(format!(
            "grid {}x{} vs {}x{}",
            pred.rows, pred.cols, truth.rows, truth.cols
        )));
    }
    let p: Vec<f64> = pred.values.iter().map(|&v| v as f64).collect();
    let t: Vec<f64> = truth.values.iter().map(|&v| v as f64).collect();
    ssim_values(&p, &t)
}

/// Per-observation accuracy 1 − |τᵢ − τ̂ᵢ| / Σⱼ|τⱼ − τ̂ⱼ|; all ones when the
/// total error vanishes.
pub fn life_accuracy(truth: &[f64], pred: &[f64]) -> Result<Vec<f64>> {
    if truth.len() != pred.len() {
        return Err(FcgError::shape(format!(
            "{} true lives vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(FcgError::domain("life accuracy needs at least one observation"));
    }
    let errors: Vec<f64> = truth.iter().zip(pred).map(|(t, p)| (t - p).abs()).collect();
    let total: f64 = errors.iter().sum();
    if total == 0.0 {
        return Ok(vec![1.0; errors.len()]);
    }
    Ok(errors.iter().map(|e| 1.0 - e / total).collect())
}
