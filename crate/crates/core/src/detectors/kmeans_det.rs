//! K-means distance detector: anomaly score = Euclidean distance to the
//! nearest training centroid.

use serde::{Deserialize, Serialize};

use super::{ModelArtifact, ModelPayload};
use crate::clustering::kmeans_fit;
use crate::data::FeatureMatrix;
use crate::error::Result;
use crate::linalg::dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansDetectorParams {
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansDetectorParams {
    fn default() -> Self {
        Self { k: 8, max_iter: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansDetectorModel {
    pub params: KMeansDetectorParams,
    pub centroids: Vec<Vec<f64>>,
}

impl KMeansDetectorModel {
    pub fn score_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(map.len());
        (0..x.n_rows())
            .map(|row| {
                buf.clear();
                buf.extend(map.iter().map(|&c| x.col(c)[row]));
                self.centroids
                    .iter()
                    .map(|c| dist(c, &buf))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }
}

/// Fits centroids on the training rows; `k` is clamped to the count of
/// distinct rows.
pub fn train_kmeans_detector(
    x: &FeatureMatrix,
    params: &KMeansDetectorParams,
) -> Result<ModelArtifact> {
    let rows = x.rows();
    let mut keys: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    keys.sort();
    keys.dedup();
    let k = params.k.clamp(1, keys.len());
    let fit = kmeans_fit(&rows, k, params.seed, params.max_iter)?;
    let model = KMeansDetectorModel { params: *params, centroids: fit.centroids };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = model.score_mapped(x, &identity);
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.seed,
        &train_scores,
        Vec::new(),
        ModelPayload::KmeansDet(model),
    ))
}
