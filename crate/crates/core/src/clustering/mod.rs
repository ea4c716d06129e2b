//! Unsupervised clustering (k-means, Gaussian mixtures, OPTICS, HDBSCAN)
//! and internal validation metrics, plus the per-segment driver that adds
//! sub-cluster feature columns to a dataset.

mod gmm;
mod hdbscan;
mod kmeans;
mod metrics;
mod optics;
mod per_segment;

pub use gmm::{gmm_fit, GmmFit};
pub use hdbscan::{hdbscan, HdbscanResult};
pub use kmeans::{kmeans_fit, KMeansFit};
pub use metrics::{calinski_harabasz, davies_bouldin, silhouette, MetricOutcome, METRIC_EPSILON};
pub use optics::{optics, OpticsResult};
pub use per_segment::{
    cluster_per_segment, ClusterAlgo, PerSegmentOutcome, SegmentMetricsRow,
};

use serde::{Deserialize, Serialize};

/// Cluster assignment for a set of rows; `-1` marks noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub labels: Vec<i64>,
    /// Count of distinct non-noise labels.
    pub k_effective: usize,
    pub algorithm: String,
}

impl ClusterLabeling {
    pub fn new(labels: Vec<i64>, algorithm: impl Into<String>) -> Self {
        let mut distinct: Vec<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
        distinct.sort_unstable();
        distinct.dedup();
        Self { labels, k_effective: distinct.len(), algorithm: algorithm.into() }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

/// Internal validation metrics over the non-noise points of a labeling;
/// `None` marks an undefined metric (fewer than two clusters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterValidation {
    pub silhouette: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub davies_bouldin: Option<f64>,
}

impl ClusterValidation {
    /// Computes all three metrics for a labeling of `x`.
    pub fn compute(x: &[Vec<f64>], labels: &[i64]) -> Self {
        Self {
            silhouette: silhouette(x, labels).ok(),
            calinski_harabasz: calinski_harabasz(x, labels).ok().map(|m| m.value),
            davies_bouldin: davies_bouldin(x, labels).ok().map(|m| m.value),
        }
    }
}
