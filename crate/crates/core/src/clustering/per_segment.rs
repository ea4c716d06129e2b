//! Per-segment clustering driver: clusters each channel's values within
//! each of its segments, appends `<channel>_subcluster` columns, and
//! averages the validation metrics across segments.

use serde::{Deserialize, Serialize};

use super::{
    gmm_fit, hdbscan, kmeans_fit, optics, ClusterLabeling, ClusterValidation,
};
use crate::data::{FeatureColumn, FeatureOrigin, LabeledDataset};
use crate::error::{Error, Result};
use crate::segmentation::SegmentMap;

/// Clustering algorithm and parameters for the per-segment driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum ClusterAlgo {
    KMeans { k: usize, max_iter: usize },
    Gmm { k: usize, max_iter: usize, reg: f64 },
    Optics { min_pts: usize, eps_max: f64, reach_threshold: f64 },
    Hdbscan { min_cluster_size: usize, min_samples: usize },
}

impl ClusterAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            ClusterAlgo::KMeans { .. } => "kmeans",
            ClusterAlgo::Gmm { .. } => "gmm",
            ClusterAlgo::Optics { .. } => "optics",
            ClusterAlgo::Hdbscan { .. } => "hdbscan",
        }
    }

    fn run(&self, x: &[Vec<f64>], seed: u64) -> Result<ClusterLabeling> {
        match *self {
            ClusterAlgo::KMeans { k, max_iter } => {
                // Clamp k to the available distinct rows so tiny segments
                // still cluster.
                let mut keys: Vec<Vec<u64>> = x
                    .iter()
                    .map(|r| r.iter().map(|v| v.to_bits()).collect())
                    .collect();
                keys.sort();
                keys.dedup();
                let k = k.min(keys.len()).max(1);
                Ok(kmeans_fit(x, k, seed, max_iter)?.labeling)
            }
            ClusterAlgo::Gmm { k, max_iter, reg } => {
                let k = k.min(x.len()).max(1);
                Ok(gmm_fit(x, k, seed, max_iter, reg)?.labeling)
            }
            ClusterAlgo::Optics { min_pts, eps_max, reach_threshold } => {
                Ok(optics(x, min_pts, eps_max, reach_threshold)?.labeling)
            }
            ClusterAlgo::Hdbscan { min_cluster_size, min_samples } => {
                Ok(hdbscan(x, min_cluster_size, min_samples)?.labeling)
            }
        }
    }
}

/// Metrics for one (channel, segment) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentMetricsRow {
    pub channel: String,
    pub segment: usize,
    pub n_rows: usize,
    pub k_effective: usize,
    pub validation: ClusterValidation,
}

/// Result of [`cluster_per_segment`].
#[derive(Debug, Clone)]
pub struct PerSegmentOutcome {
    /// Algorithm that produced the labels.
    pub algorithm: String,
    /// Averages over all segments where each metric was defined.
    pub averaged: ClusterValidation,
    /// Per-(channel, segment) metric rows.
    pub per_segment: Vec<SegmentMetricsRow>,
    /// (channel, segment) pairs skipped for being below the minimum size.
    pub skipped: Vec<(String, usize)>,
    /// Per-channel full-length subcluster label columns (noise/skipped
    /// rows are -1); ids are offset so they are unique across segments.
    pub labels_per_channel: Vec<(String, Vec<i64>)>,
}

fn zscore_columns(x: &mut [Vec<f64>]) {
    if x.is_empty() {
        return;
    }
    let d = x[0].len();
    let n = x.len() as f64;
    for j in 0..d {
        let mean = x.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for row in x.iter_mut() {
            row[j] = if sd > 0.0 { (row[j] - mean) / sd } else { 0.0 };
        }
    }
}

/// Clusters every (channel, segment) cell of the dataset with `algo` and
/// appends one `<channel>_subcluster` column per channel.
///
/// Distances are Euclidean on per-segment z-scored values. Segments with
/// fewer than `min_segment_size` rows are skipped (their rows keep label
/// -1) and excluded from the averages.
pub fn cluster_per_segment(
    dataset: &mut LabeledDataset,
    maps: &[(String, SegmentMap)],
    algo: &ClusterAlgo,
    min_segment_size: usize,
    seed: u64,
) -> Result<PerSegmentOutcome> {
    let n_rows = dataset.n_rows();
    let mut per_segment = Vec::new();
    let mut skipped = Vec::new();
    let mut labels_per_channel = Vec::new();
    let mut scored_any = false;

    for (channel_idx, (channel, map)) in maps.iter().enumerate() {
        if map.ids.len() != n_rows {
            return Err(Error::RejectedInput(format!(
                "segment map for {channel} has {} rows, dataset has {n_rows}",
                map.ids.len()
            )));
        }
        let column = dataset
            .column_by_name(channel)
            .ok_or_else(|| Error::RejectedInput(format!("channel column {channel} not found")))?
            .values
            .clone();
        let mut channel_labels = vec![-1i64; n_rows];
        let mut label_offset = 0i64;
        for (segment_id, (lo, hi)) in map.segment_ranges().into_iter().enumerate() {
            let rows = hi - lo;
            if rows < min_segment_size {
                skipped.push((channel.clone(), segment_id));
                continue;
            }
            let mut x: Vec<Vec<f64>> = column[lo..hi].iter().map(|&v| vec![v]).collect();
            zscore_columns(&mut x);
            let cell_seed = crate::derive_seed(seed, (channel_idx * 100_003 + segment_id) as u64);
            let labeling = algo.run(&x, cell_seed)?;
            for (offset, &label) in labeling.labels.iter().enumerate() {
                channel_labels[lo + offset] =
                    if label >= 0 { label + label_offset } else { -1 };
            }
            // Advance past the largest raw id, not k_effective: a labeling
            // with gaps (an emptied cluster) must still map to unique ids.
            let max_label = labeling.labels.iter().copied().max().unwrap_or(-1);
            let validation = ClusterValidation::compute(&x, &labeling.labels);
            per_segment.push(SegmentMetricsRow {
                channel: channel.clone(),
                segment: segment_id,
                n_rows: rows,
                k_effective: labeling.k_effective,
                validation,
            });
            label_offset += max_label + 1;
            scored_any = true;
        }
        labels_per_channel.push((channel.clone(), channel_labels));
    }

    if !scored_any {
        return Err(Error::RejectedInput(
            "every segment fell below the minimum cluster-able size".into(),
        ));
    }

    let averaged = ClusterValidation {
        silhouette: mean_defined(per_segment.iter().map(|r| r.validation.silhouette)),
        calinski_harabasz: mean_defined(per_segment.iter().map(|r| r.validation.calinski_harabasz)),
        davies_bouldin: mean_defined(per_segment.iter().map(|r| r.validation.davies_bouldin)),
    };

    for (channel, labels) in &labels_per_channel {
        dataset.push_column(FeatureColumn {
            name: format!("{channel}_subcluster"),
            origin: FeatureOrigin::Cluster,
            values: labels.iter().map(|&l| l as f64).collect(),
        })?;
    }

    Ok(PerSegmentOutcome {
        algorithm: algo.name().into(),
        averaged,
        per_segment,
        skipped,
        labels_per_channel,
    })
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}
