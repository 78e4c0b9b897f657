//! Local-density point weights from k-nearest-neighbor median distances.
//!
//! Each point's density is the median Euclidean distance to its `k` nearest
//! neighbors. Densities above the mean are truncated to the mean, then
//! everything is divided by the maximum, so points in neighborhoods at least
//! as sparse as average get full weight and clustered points get less.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Matrix, PointWeights};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// Number of nearest neighbors.
    pub k: usize,
    /// Lower bound on the resulting weights; duplicates would otherwise get 0.
    pub floor: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { k: 20, floor: 1e-6 }
    }
}

impl DensityConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("density k must be at least 1".into()));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            return Err(Error::InvalidConfig(format!("density floor {} outside (0, 1)", self.floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityResult {
    /// Truncated densities, in distance units.
    pub raw_density: Vec<f64>,
    pub weights: PointWeights,
    /// Mean of the densities before truncation.
    pub mean_density: f64,
    pub truncated_count: usize,
}

/// Median distance from each point to its `min(k, n - 1)` nearest neighbors.
pub fn knn_median_density(points: &Matrix, k: usize) -> Result<Vec<f64>> {
    knn_median_density_with(points, k, Execution::default())
}

pub fn knn_median_density_with(points: &Matrix, k: usize, exec: Execution) -> Result<Vec<f64>> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::Degenerate(format!("density needs at least 2 points, got {n}")));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("density k must be at least 1".into()));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("density points"));
    }
    let k = k.min(n - 1);
    Ok(par::map_range(n, exec, |i| median_neighbor_distance(points, i, k)))
}

fn median_neighbor_distance(points: &Matrix, i: usize, k: usize) -> f64 {
    let xi = points.row(i);
    let mut dists: Vec<(f64, usize)> =
        points.rows_iter().enumerate().filter(|&(l, _)| l != i).map(|(l, xl)| (squared_distance(xi, xl), l)).collect();

    // (distance, index) is a total order, so the selected neighbor set is
    // deterministic under ties.
    let by_dist_then_index = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, by_dist_then_index);
        dists.truncate(k);
    }
    dists.sort_unstable_by(by_dist_then_index);

    let d = |j: usize| dists[j].0.sqrt();
    if k % 2 == 1 {
        d(k / 2)
    } else {
        0.5 * (d(k / 2 - 1) + d(k / 2))
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full weighting pipeline: densities, truncation at the mean, normalization
/// by the maximum, flooring.
pub fn density_weights(points: &Matrix, config: &DensityConfig) -> Result<DensityResult> {
    density_weights_with(points, config, Execution::default())
}

pub fn density_weights_with(points: &Matrix, config: &DensityConfig, exec: Execution) -> Result<DensityResult> {
    config.validate()?;
    let mut dens = knn_median_density_with(points, config.k, exec)?;
    let mean = dens.iter().sum::<f64>() / dens.len() as f64;

    let mut truncated_count = 0;
    for d in dens.iter_mut() {
        if *d > mean {
            *d = mean;
            truncated_count += 1;
        }
    }
    let max = dens.iter().cloned().fold(0.0_f64, f64::max);
    if max.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::Degenerate("all neighbor distances are zero; density weighting is undefined".into()));
    }
    let beta = dens.iter().map(|d| (d / max).max(config.floor)).collect();

    Ok(DensityResult { raw_density: dens, weights: PointWeights::new(beta)?, mean_density: mean, truncated_count })
}
