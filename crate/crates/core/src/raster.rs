//! Voxel (pixel) occupancy grids of crack patterns.
//!
//! Row 0 sits at y = 0 and column 0 at x = 0; a point on a cell boundary
//! belongs to the cell above/right of it, except on the far plate edges.

use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};
use crate::fracture::{CrackPath, PlateSpec, Point};

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub rows: usize,
    pub cols: usize,
    /// Cell extent along (x, y) in metres.
    pub cell_size: [f64; 2],
    /// Row-major values in [0, 1].
    pub values: Vec<f32>,
}

impl VoxelGrid {
    pub fn empty(plate: &PlateSpec, rows: usize, cols: usize) -> Self {
        VoxelGrid {
            rows,
            cols,
            cell_size: [plate.width / cols as f64, plate.height / rows as f64],
            values: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }

    pub fn occupied(&self) -> usize {
        self.values.iter().filter(|&&v| v >= 0.5).count()
    }

    /// Binary view thresholded at 0.5.
    pub fn binarized(&self) -> VoxelGrid {
        VoxelGrid {
            values: self
                .values
                .iter()
                .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
                .collect(),
            ..self.clone()
        }
    }

    pub fn same_shape(&self, other: &VoxelGrid) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn cell_of(&self, p: &Point) -> (isize, isize) {
        let c = ((p.x / self.cell_size[0]).floor() as isize).min(self.cols as isize - 1);
        let r = ((p.y / self.cell_size[1]).floor() as isize).min(self.rows as isize - 1);
        (c, r)
    }

    fn mark(&mut self, col: isize, row: isize) {
        if col >= 0 && row >= 0 && (col as usize) < self.cols && (row as usize) < self.rows {
            self.values[row as usize * self.cols + col as usize] = 1.0;
        }
    }

    /// Mark every cell the segment passes through (grid traversal).
    fn draw_segment(&mut self, a: &Point, b: &Point) {
        let (mut col, mut row) = self.cell_of(a);
        let (end_col, end_row) = self.cell_of(b);
        self.mark(col, row);
        let (cw, ch) = (self.cell_size[0], self.cell_size[1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let step_c: isize = if dx > 0.0 { 1 } else { -1 };
        let step_r: isize = if dy > 0.0 { 1 } else { -1 };
        let next_edge = |idx: isize, step: isize, size: f64| {
            if step > 0 {
                (idx + 1) as f64 * size
            } else {
                idx as f64 * size
            }
        };
        let mut t_max_x = if dx != 0.0 {
            (next_edge(col, step_c, cw) - a.x) / dx
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if dy != 0.0 {
            (next_edge(row, step_r, ch) - a.y) / dy
        } else {
            f64::INFINITY
        };
        let t_dx = if dx != 0.0 { cw / dx.abs() } else { f64::INFINITY };
        let t_dy = if dy != 0.0 { ch / dy.abs() } else { f64::INFINITY };
        let budget = (end_col - col).unsigned_abs() + (end_row - row).unsigned_abs() + 2;
        for _ in 0..budget {
            if col == end_col && row == end_row {
                break;
            }
            if t_max_x.min(t_max_y) > 1.0 {
                break;
            }
            if t_max_x < t_max_y {
                col += step_c;
                t_max_x += t_dx;
            } else {
                row += step_r;
                t_max_y += t_dy;
            }
            self.mark(col, row);
        }
        self.mark(end_col, end_row);
    }
}

/// Binary occupancy of the crack (notch included) up to tip index `step`.
pub fn rasterize(
    path: &CrackPath,
    step: usize,
    plate: &PlateSpec,
    rows: usize,
    cols: usize,
) -> Result<VoxelGrid> {
    if rows < MIN_RESOLUTION || cols < MIN_RESOLUTION {
        return Err(FcgError::domain(format!(
            "resolution {rows}x{cols} below the {MIN_RESOLUTION}x{MIN_RESOLUTION} minimum"
        )));
    }
    if path.points.is_empty() {
        return Err(FcgError::domain("cannot rasterize an empty path"));
    }
    let poly = path.polyline_to(step);
    if let Some(p) = poly.iter().find(|p| !plate.contains(p)) {
        return Err(FcgError::domain(format!(
            "path point ({}, {}) lies outside the plate",
            p.x, p.y
        )));
    }
    let mut grid = VoxelGrid::empty(plate, rows, cols);
    for seg in poly.windows(2) {
        grid.draw_segment(&seg[0], &seg[1]);
    }
    Ok(grid)
}

/// Recover a crack polyline from a grid: the mean height of the cells at or
/// above `threshold` in each column, left to right, starting at the edge.
///
/// Columns with no occupied cells are skipped.
pub fn trace_path(grid: &VoxelGrid, threshold: f32) -> Vec<Point> {
    let mut pts = Vec::new();
    for c in 0..grid.cols {
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 0..grid.rows {
            if grid.get(r, c) >= threshold {
                sum += (r as f64 + 0.5) * grid.cell_size[1];
                count += 1;
            }
        }
        if count > 0 {
            let x = if pts.is_empty() && c == 0 {
                0.0
            } else {
                (c as f64 + 0.5) * grid.cell_size[0]
            };
            pts.push(Point::new(x, sum / count as f64));
        }
    }
    pts
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(y: f64, tips: &[f64]) -> CrackPath {
        CrackPath {
            mouth: Point::new(0.0, y),
            points: tips.iter().map(|&x| Point::new(x, y)).collect(),
            tangents: vec![0.0; tips.len()],
            step_cycles: vec![1.0; tips.len() - 1],
            total_life: (tips.len() - 1) as f64,
        }
    }

    #[test]
    fn notch_only_sets_seven_cells() {
        let plate = PlateSpec::default();
        let path = straight(0.005, &[0.001]);
        let g = rasterize(&path, 0, &plate, 64, 64).unwrap();
        assert_eq!(g.occupied(), 7);
        for c in 0..7 {
            assert_eq!(g.get(32, c), 1.0);
        }
    }

    #[test]
    fn row_centre_crack_fills_row_prefix() {
        let plate = PlateSpec::default();
        let cell = plate.height / 64.0;
        let y = 20.5 * cell;
        let path = straight(y, &[0.001, 0.004]);
        let g = rasterize(&path, 1, &plate, 64, 64).unwrap();
        let tip_col = (0.004 / cell).floor() as usize;
        for r in 0..64 {
            for c in 0..64 {
                let expect = r == 20 && c <= tip_col;
                assert_eq!(g.get(r, c) == 1.0, expect, "cell ({r}, {c})");
            }
        }
    }

    #[test]
    fn diagonal_segment_is_connected() {
        let plate = PlateSpec::default();
        let path = CrackPath {
            mouth: Point::new(0.0, 0.005),
            points: vec![Point::new(0.001, 0.005), Point::new(0.004, 0.008)],
            tangents: vec![0.0, 0.785],
            step_cycles: vec![1.0],
            total_life: 1.0,
        };
        let g = rasterize(&path, 1, &plate, 64, 64).unwrap();
        // every column between notch tip and end holds at least one cell
        let c0 = (0.001 / g.cell_size[0]) as usize;
        let c1 = (0.004 / g.cell_size[0]) as usize;
        for c in c0..=c1 {
            assert!((0..64).any(|r| g.get(r, c) == 1.0), "column {c}");
        }
    }

    #[test]
    fn rejects_small_grids_and_outside_points() {
        let plate = PlateSpec::default();
        let path = straight(0.005, &[0.001]);
        assert!(rasterize(&path, 0, &plate, 4, 64).is_err());
        let mut bad = path.clone();
        bad.points[0].y = 0.02;
        assert!(rasterize(&bad, 0, &plate, 16, 16).is_err());
    }

    #[test]
    fn trace_recovers_straight_crack() {
        let plate = PlateSpec::default();
        let path = straight(0.005, &[0.001, 0.003]);
        let g = rasterize(&path, 1, &plate, 64, 64).unwrap();
        let pts = trace_path(&g, 0.5);
        assert_eq!(pts[0].x, 0.0);
        assert!(pts.iter().all(|p| (p.y - 32.5 * g.cell_size[1]).abs() < 1e-12));
        assert!((pts.last().unwrap().x - 0.003).abs() < g.cell_size[0]);
    }
}
