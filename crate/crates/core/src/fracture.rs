//! Linear elastic fracture mechanics for an edge-notched plate.
//!
//! Stress intensity factors come from far-field traction resolution on the
//! current crack plane combined with the single-edge-notch finite-width
//! correction. The kink direction follows the maximum tangential stress
//! rule and the cycle count per advancement step follows the Paris-Erdogan
//! rate, integrated with a fixed geometric step.
//!
//! Units: lengths in metres, stresses in MPa, stress intensity in MPa·√m.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::loads::LoadSchedule;

/// Largest a/W for which the edge-crack polynomial is trusted.
pub const MAX_CRACK_RATIO: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSpec {
    /// Pa
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// (m/cycle) / (MPa·√m)^m
    pub paris_c: f64,
    pub paris_m: f64,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        MaterialSpec {
            young_modulus: 200e9,
            poisson_ratio: 0.31,
            paris_c: 9.7e-12,
            paris_m: 3.0,
        }
    }
}

impl MaterialSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(FcgError::config("material.young_modulus", "must be > 0"));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(FcgError::config("material.poisson_ratio", "must lie in (0, 0.5)"));
        }
        if !(self.paris_c > 0.0 && self.paris_c.is_finite()) {
            return Err(FcgError::config("material.paris_c", "must be > 0"));
        }
        if !(self.paris_m >= 0.0 && self.paris_m.is_finite()) {
            return Err(FcgError::config("material.paris_m", "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateSpec {
    pub width: f64,
    pub height: f64,
    pub notch_length: f64,
    /// Fraction of the height at which the edge notch sits.
    pub notch_position: f64,
    pub advance_step: f64,
    pub max_crack_fraction: f64,
}

impl Default for PlateSpec {
    fn default() -> Self {
        PlateSpec {
            width: 0.01,
            height: 0.01,
            notch_length: 0.001,
            notch_position: 0.5,
            advance_step: 3e-4,
            max_crack_fraction: 0.6,
        }
    }
}

impl PlateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(FcgError::config("plate.width", "must be > 0"));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(FcgError::config("plate.height", "must be > 0"));
        }
        if !(self.notch_length > 0.0 && self.notch_length < self.width) {
            return Err(FcgError::config("plate.notch_length", "must lie in (0, width)"));
        }
        if !(self.notch_position >= 0.0 && self.notch_position <= 1.0) {
            return Err(FcgError::config("plate.notch_position", "must lie in [0, 1]"));
        }
        if !(self.advance_step > 0.0 && self.advance_step <= self.notch_length) {
            return Err(FcgError::config(
                "plate.advance_step",
                "must lie in (0, notch_length]",
            ));
        }
        if !(self.max_crack_fraction > 0.0 && self.max_crack_fraction <= MAX_CRACK_RATIO) {
            return Err(FcgError::config(
                "plate.max_crack_fraction",
                "must lie in (0, 0.6]",
            ));
        }
        Ok(())
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// Point where the notch meets the left edge.
    pub fn notch_mouth(&self) -> Point {
        Point::new(0.0, self.notch_position * self.height)
    }

    pub fn crack_length_limit(&self) -> f64 {
        self.max_crack_fraction * self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TipState {
    pub position: Point,
    /// Radians from the width axis.
    pub tangent_angle: f64,
    /// Cumulative crack length, notch included.
    pub arc_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SifPair {
    pub k1: f64,
    pub k2: f64,
}

impl SifPair {
    /// Mixed-mode driving force √(K_I² + K_II²).
    pub fn equivalent(&self) -> f64 {
        self.k1.hypot(self.k2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackPath {
    /// Notch mouth on the plate edge; the notch runs from here to `points[0]`.
    pub mouth: Point,
    pub points: Vec<Point>,
    /// Tangent angle of the segment ending at each point (0 for the notch tip).
    pub tangents: Vec<f64>,
    pub step_cycles: Vec<f64>,
    pub total_life: f64,
}

impl CrackPath {
    pub fn n_steps(&self) -> usize {
        self.step_cycles.len()
    }

    /// Mouth followed by every tip position up to and including `step`.
    pub fn polyline_to(&self, step: usize) -> Vec<Point> {
        let end = (step + 1).min(self.points.len());
        std::iter::once(self.mouth)
            .chain(self.points[..end].iter().copied())
            .collect()
    }

    pub fn polyline(&self) -> Vec<Point> {
        self.polyline_to(self.points.len().saturating_sub(1))
    }

    /// Cycles elapsed when the tip reaches `points[step]`.
    pub fn elapsed_at(&self, step: usize) -> f64 {
        self.step_cycles[..step].iter().sum()
    }

    /// Remaining life at every point; exact because step cycles are whole numbers.
    pub fn remaining_life(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points.len());
        let mut elapsed = 0.0;
        out.push(self.total_life);
        for c in &self.step_cycles {
            elapsed += c;
            out.push(self.total_life - elapsed);
        }
        out
    }
}

/// Single-edge-notch finite-width correction F(a/W).
pub fn finite_width_factor(a_over_w: f64) -> Result<f64> {
    if !(0.0..=MAX_CRACK_RATIO + 1e-12).contains(&a_over_w) {
        return Err(FcgError::domain(format!(
            "a/W = {a_over_w} outside the correction's validity range [0, {MAX_CRACK_RATIO}]"
        )));
    }
    let x = a_over_w;
    Ok(1.12 - 0.231 * x + 10.55 * x * x - 21.72 * x.powi(3) + 30.39 * x.powi(4))
}

/// Resolve remote tension/shear (MPa) onto the crack plane at the tip.
pub fn resolve_sifs(tension: f64, shear: f64, tip: &TipState, plate: &PlateSpec) -> Result<SifPair> {
    if !plate.contains(&tip.position) {
        return Err(FcgError::domain(format!(
            "tip ({}, {}) lies outside the plate",
            tip.position.x, tip.position.y
        )));
    }
    if !(tip.arc_length >= 0.0) {
        return Err(FcgError::domain("negative crack length"));
    }
    let f = finite_width_factor(tip.arc_length / plate.width)?;
    let (s, c) = tip.tangent_angle.sin_cos();
    let (s2, c2) = (2.0 * tip.tangent_angle).sin_cos();
    let normal = tension * c * c - 2.0 * shear * s * c;
    let sliding = shear * c2 + 0.5 * tension * s2;
    let root = (PI * tip.arc_length).sqrt() * f;
    Ok(SifPair {
        // closed crack faces carry no opening mode
        k1: normal.max(0.0) * root,
        k2: sliding * root,
    })
}

/// Kink angle from the maximum tangential stress criterion.
///
/// The magnitude follows the closed form; the sign opposes K_II.
pub fn deflection_angle(sifs: SifPair) -> Result<f64> {
    let SifPair { k1, k2 } = sifs;
    if k1 == 0.0 && k2 == 0.0 {
        return Err(FcgError::UndefinedDirection);
    }
    if k2 == 0.0 {
        return Ok(0.0);
    }
    let (k1s, k2s) = (k1 * k1, k2 * k2);
    let cos = (3.0 * k2s + (k1s * k1s + 8.0 * k1s * k2s).sqrt()) / (k1s + 9.0 * k2s);
    let magnitude = cos.clamp(-1.0, 1.0).acos();
    Ok(-k2.signum() * magnitude)
}

/// Cycles needed to advance one geometric step at constant ΔK.
pub fn paris_increment(delta_k_eq: f64, material: &MaterialSpec, advance_step: f64) -> Result<f64> {
    if !(delta_k_eq > 0.0) {
        return Err(FcgError::NonPropagating { step: 0 });
    }
    Ok(advance_step / (material.paris_c * delta_k_eq.powf(material.paris_m)))
}

/// Grow the edge crack until it reaches the length limit or leaves the plate.
pub fn simulate_fcg(
    plate: &PlateSpec,
    material: &MaterialSpec,
    schedule: &LoadSchedule,
) -> Result<CrackPath> {
    plate.validate()?;
    material.validate()?;
    schedule.check_span(plate.width)?;

    let mouth = plate.notch_mouth();
    let mut tip = TipState {
        position: Point::new(plate.notch_length, mouth.y),
        tangent_angle: 0.0,
        arc_length: plate.notch_length,
    };
    let limit = plate.crack_length_limit();
    let mut points = vec![tip.position];
    let mut tangents = vec![0.0];
    let mut step_cycles = Vec::new();

    let mut step = 0usize;
    loop {
        // multiply rather than accumulate so the length never drifts
        tip.arc_length = plate.notch_length + step as f64 * plate.advance_step;
        if tip.arc_length >= limit {
            break;
        }
        let (tension, shear) = schedule.loads_at(tip.position.x)?;
        let sifs = resolve_sifs(tension, shear, &tip, plate)?;
        if sifs.k1 == 0.0 && sifs.k2 == 0.0 {
            return Err(FcgError::NonPropagating { step });
        }
        let angle = tip.tangent_angle + deflection_angle(sifs)?;
        let (s, c) = angle.sin_cos();
        let next = Point::new(
            tip.position.x + plate.advance_step * c,
            tip.position.y + plate.advance_step * s,
        );
        if !plate.contains(&next) {
            break;
        }
        let cycles = paris_increment(sifs.equivalent(), material, plate.advance_step)
            .map_err(|_| FcgError::NonPropagating { step })?;
        // whole cycles keep the life bookkeeping exact
        step_cycles.push(cycles.round().max(1.0));
        tip.position = next;
        tip.tangent_angle = angle;
        points.push(next);
        tangents.push(angle);
        step += 1;
    }

    let total_life = step_cycles.iter().sum();
    Ok(CrackPath {
        mouth,
        points,
        tangents,
        step_cycles,
        total_life,
    })
}
