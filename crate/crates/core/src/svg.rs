//! Minimal SVG plots: crack path overlays and metric curves.

use std::fmt::Write;

use crate::fracture::{PlateSpec, Point};

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn header(out: &mut String, config_hash: &str, width: f64, height: f64) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<!-- config_hash: {config_hash} -->");
    let _ = writeln!(out, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, dash: bool) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dash { " stroke-dasharray=\"6 4\"" } else { "" };
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
        coords.join(" ")
    );
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" font-size=\"11\" fill=\"{color}\">{label}</text>",
            SIZE + MARGIN + 10.0
        );
    }
}

/// True, observed and predicted crack paths drawn over the plate outline.
pub fn path_overlay(
    plate: &PlateSpec,
    truth: &[Point],
    observed: &[Point],
    predicted: &[Point],
    config_hash: &str,
) -> String {
    let scale = SIZE / plate.width.max(plate.height);
    // plate y grows upwards, SVG y downwards
    let map = |p: &Point| (MARGIN + p.x * scale, MARGIN + (plate.height - p.y) * scale);
    let mut out = String::new();
    header(&mut out, config_hash, SIZE + 2.0 * MARGIN + 90.0, SIZE + 2.0 * MARGIN);
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        plate.width * scale,
        plate.height * scale
    );
    let series: [(&[Point], bool); 3] = [(truth, false), (predicted, true), (observed, false)];
    for (i, (pts, dash)) in series.iter().enumerate() {
        let mapped: Vec<(f64, f64)> = pts.iter().map(map).collect();
        polyline(&mut out, &mapped, COLORS[i], *dash);
    }
    legend(&mut out, &["truth", "predicted", "observed"]);
    out.push_str("</svg>\n");
    out
}

/// Line chart of one or more labelled (x, y) series.
pub fn line_chart(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)], config_hash: &str) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, s)| s.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let map = |(x, y): (f64, f64)| {
        (
            MARGIN + (x - x0) / (x1 - x0) * SIZE,
            MARGIN + (1.0 - (y - y0) / (y1 - y0)) * SIZE,
        )
    };
    let mut out = String::new();
    header(&mut out, config_hash, SIZE + 2.0 * MARGIN + 90.0, SIZE + 2.0 * MARGIN);
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN}\" y=\"{:.1}\" font-size=\"14\">{title}</text>",
        MARGIN - 20.0
    );
    let _ = writeln!(
        out,
        "<path d=\"M{MARGIN},{MARGIN} V{b} H{r}\" fill=\"none\" stroke=\"black\"/>",
        b = MARGIN + SIZE,
        r = MARGIN + SIZE
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{x_label} [{x0:.3}, {x1:.3}]</text>",
        MARGIN,
        MARGIN + SIZE + 30.0
    );
    let _ = writeln!(
        out,
        "<text x=\"5\" y=\"{:.1}\" font-size=\"11\">{y1:.4}</text>\n<text x=\"5\" y=\"{:.1}\" font-size=\"11\">{y0:.4}</text>",
        MARGIN + 4.0,
        MARGIN + SIZE
    );
    for (i, (_, pts)) in series.iter().enumerate() {
        let mapped: Vec<(f64, f64)> = pts.iter().copied().map(map).collect();
        polyline(&mut out, &mapped, COLORS[i % COLORS.len()], false);
        for (x, y) in &mapped {
            let _ = writeln!(
                out,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{}\"/>",
                COLORS[i % COLORS.len()]
            );
        }
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| l.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}
