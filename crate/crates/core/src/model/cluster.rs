//! Density clustering of latent points for rare-pattern labelling.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{FcgError, Result};

pub const DEFAULT_EPS: f64 = 0.5;
pub const DEFAULT_MIN_PTS: usize = 5;
/// Clusters holding less than this fraction of all points count as rare.
pub const RARE_CLUSTER_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    /// Cluster id per point; `None` marks noise.
    pub labels: Vec<Option<usize>>,
    pub eps: f64,
    pub min_pts: usize,
}

impl ClusterLabeling {
    pub fn n_clusters(&self) -> usize {
        self.labels.iter().flatten().max().map_or(0, |m| m + 1)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for id in self.labels.iter().flatten() {
            sizes[*id] += 1;
        }
        sizes
    }

    /// Noise points and members of clusters below the rare fraction.
    pub fn rare(&self) -> Vec<bool> {
        let sizes = self.cluster_sizes();
        let n = self.labels.len() as f64;
        self.labels
            .iter()
            .map(|l| match l {
                None => true,
                Some(id) => (sizes[*id] as f64) < RARE_CLUSTER_FRACTION * n,
            })
            .collect()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// DBSCAN with order-independent output.
///
/// A point's neighbourhood includes itself. Border points join the cluster
/// of their nearest core point (ties broken by the lexicographically
/// smallest core), and clusters are numbered by their smallest core point.
pub fn label_rare(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<ClusterLabeling> {
    if !(eps > 0.0) {
        return Err(FcgError::config("training.cluster_eps", "must be > 0"));
    }
    if min_pts == 0 {
        return Err(FcgError::config("training.cluster_min_pts", "must be >= 1"));
    }
    if points.len() < min_pts {
        return Err(FcgError::domain(format!(
            "{} points but min_pts = {min_pts}",
            points.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
        return Err(FcgError::shape("latent points must be finite with a common width"));
    }
    let n = points.len();
    let eps2 = eps * eps;
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist2(&points[i], &points[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();

    // connected components over core points
    let mut component = vec![usize::MAX; n];
    let mut n_comp = 0;
    for start in 0..n {
        if !core[start] || component[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        component[start] = n_comp;
        while let Some(i) = stack.pop() {
            for &j in &neighbours[i] {
                if core[j] && component[j] == usize::MAX {
                    component[j] = n_comp;
                    stack.push(j);
                }
            }
        }
        n_comp += 1;
    }

    // canonical numbering by each component's smallest core point
    let mut representative: Vec<Option<usize>> = vec![None; n_comp];
    for i in (0..n).filter(|&i| core[i]) {
        let slot = &mut representative[component[i]];
        if slot.is_none_or(|r| lex(&points[i], &points[r]).is_lt()) {
            *slot = Some(i);
        }
    }
    let mut order: Vec<usize> = (0..n_comp).collect();
    order.sort_by(|&a, &b| {
        lex(
            &points[representative[a].unwrap()],
            &points[representative[b].unwrap()],
        )
    });
    let mut rename = vec![0; n_comp];
    for (new, &old) in order.iter().enumerate() {
        rename[old] = new;
    }

    let labels = (0..n)
        .map(|i| {
            if core[i] {
                return Some(rename[component[i]]);
            }
            neighbours[i]
                .iter()
                .filter(|&&j| core[j])
                .min_by(|&&a, &&b| {
                    dist2(&points[i], &points[a])
                        .total_cmp(&dist2(&points[i], &points[b]))
                        .then_with(|| lex(&points[a], &points[b]))
                })
                .map(|&j| rename[component[j]])
        })
        .collect();
    Ok(ClusterLabeling { labels, eps, min_pts })
}
