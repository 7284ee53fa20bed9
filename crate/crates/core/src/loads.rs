//! Sliced Gaussian load schedules.
//!
//! The plate is cut into equal-width slices along the width axis; each slice
//! carries its own tension and shear amplitude drawn from independent
//! Gaussians. A draw is a rare event when its density relative to the peak
//! falls below `rare_rel_prob`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// MPa
    pub tension_mean: f64,
    pub tension_std: f64,
    pub shear_mean: f64,
    pub shear_std: f64,
    pub rare_rel_prob: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            tension_mean: 100.0,
            tension_std: 10.0,
            shear_mean: 0.0,
            shear_std: 10.0,
            rare_rel_prob: 0.05,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("noise.tension_mean", self.tension_mean),
            ("noise.shear_mean", self.shear_mean),
        ] {
            if !v.is_finite() {
                return Err(FcgError::config(field, "must be finite"));
            }
        }
        for (field, v) in [
            ("noise.tension_std", self.tension_std),
            ("noise.shear_std", self.shear_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(FcgError::config(field, "must be >= 0"));
            }
        }
        if !(self.rare_rel_prob > 0.0 && self.rare_rel_prob < 1.0) {
            return Err(FcgError::config("noise.rare_rel_prob", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// |z| beyond which exp(-z²/2) < rare_rel_prob.
    pub fn tail_threshold(&self) -> f64 {
        tail_threshold(self.rare_rel_prob)
    }
}

pub fn tail_threshold(rare_rel_prob: f64) -> f64 {
    (-2.0 * rare_rel_prob.ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSchedule {
    pub n_slices: usize,
    /// n_slices + 1 positions along the width axis (m).
    pub slice_bounds: Vec<f64>,
    pub tensions: Vec<f64>,
    pub shears: Vec<f64>,
    pub rare_flags: Vec<bool>,
}

impl LoadSchedule {
    /// Constant amplitudes over `n_slices` equal slices.
    pub fn uniform(tension: f64, shear: f64, n_slices: usize, width: f64) -> Self {
        LoadSchedule {
            n_slices,
            slice_bounds: equal_bounds(n_slices, width),
            tensions: vec![tension; n_slices],
            shears: vec![shear; n_slices],
            rare_flags: vec![false; n_slices],
        }
    }

    pub fn width(&self) -> f64 {
        *self.slice_bounds.last().unwrap_or(&0.0)
    }

    /// A sample counts as rare when any of its slices does.
    pub fn is_rare(&self) -> bool {
        self.rare_flags.iter().any(|&f| f)
    }

    pub(crate) fn check_span(&self, width: f64) -> Result<()> {
        let n = self.n_slices;
        if n == 0
            || self.slice_bounds.len() != n + 1
            || self.tensions.len() != n
            || self.shears.len() != n
            || self.rare_flags.len() != n
        {
            return Err(FcgError::domain("load schedule arrays disagree with n_slices"));
        }
        if self.slice_bounds[0] != 0.0 || (self.width() - width).abs() > 1e-12 * width.max(1.0) {
            return Err(FcgError::domain(format!(
                "load schedule spans [{}, {}] but the plate is {width} m wide",
                self.slice_bounds[0],
                self.width()
            )));
        }
        if self.slice_bounds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FcgError::domain("slice bounds must increase strictly"));
        }
        Ok(())
    }

    /// Amplitudes (tension, shear) of the slice containing `x`.
    ///
    /// A boundary belongs to the slice on its right, except the far edge.
    pub fn loads_at(&self, x: f64) -> Result<(f64, f64)> {
        let width = self.width();
        if !(x >= 0.0 && x <= width) {
            return Err(FcgError::domain(format!(
                "position {x} m lies outside [0, {width}] m"
            )));
        }
        let interior = &self.slice_bounds[1..self.n_slices];
        let idx = interior.partition_point(|&b| b <= x);
        Ok((self.tensions[idx], self.shears[idx]))
    }
}

fn equal_bounds(n_slices: usize, width: f64) -> Vec<f64> {
    (0..=n_slices)
        .map(|i| width * i as f64 / n_slices as f64)
        .collect()
}

/// Draw one schedule. Deterministic for a fixed seed.
pub fn build_schedule(noise: &NoiseSpec, n_slices: usize, width: f64, rng_seed: u64) -> Result<LoadSchedule> {
    if n_slices == 0 {
        return Err(FcgError::config("slicing.n_slices", "must be >= 1"));
    }
    if !(width > 0.0) {
        return Err(FcgError::domain("plate width must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let threshold = noise.tail_threshold();
    let mut sched = LoadSchedule::uniform(noise.tension_mean, noise.shear_mean, n_slices, width);
    for i in 0..n_slices {
        let zt: f64 = StandardNormal.sample(&mut rng);
        let zs: f64 = StandardNormal.sample(&mut rng);
        let tension = noise.tension_mean + noise.tension_std * zt;
        let shear = noise.shear_mean + noise.shear_std * zs;
        sched.tensions[i] = tension;
        sched.shears[i] = shear;
        sched.rare_flags[i] = (tension - noise.tension_mean).abs() > noise.tension_std * threshold
            || (shear - noise.shear_mean).abs() > noise.shear_std * threshold;
    }
    Ok(sched)
}
