//! Lloyd's k-means with k-means++ seeding.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::ClusterLabeling;
use crate::error::{Error, Result};
use crate::linalg::sq_dist;

/// Fitted k-means model.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labeling: ClusterLabeling,
    pub centroids: Vec<Vec<f64>>,
    /// Objective (sum of squared distances to the assigned centroid) after
    /// each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap()
    }
}

fn count_distinct_rows(x: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = x
        .iter()
        .map(|row| row.iter().map(|v| v.to_bits()).collect())
        .collect();
    keys.sort();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding: first centroid uniform, later centroids sampled
/// proportionally to squared distance from the nearest chosen centroid.
pub(crate) fn kmeans_pp_init(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(x[rng.random_range(0..n)].clone());
    let mut best_sq: Vec<f64> = x.iter().map(|row| sq_dist(row, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = best_sq.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in best_sq.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            // All remaining mass at the chosen centroids; any distinct row
            // works (the caller guarantees k <= distinct rows).
            (0..n).find(|&i| best_sq[i] > 0.0).unwrap_or(0)
        };
        let c = x[next].clone();
        for (i, row) in x.iter().enumerate() {
            best_sq[i] = best_sq[i].min(sq_dist(row, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(x: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(x.len());
    let mut inertia = 0.0;
    for row in x {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(row, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels.push(best);
        inertia += best_d;
    }
    (labels, inertia)
}

/// Fits k-means and returns the labeling, centroids, and objective trace.
pub fn kmeans_fit(x: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    if x.is_empty() || k == 0 {
        return Err(Error::RejectedInput("kmeans needs data and k >= 1".into()));
    }
    let distinct = count_distinct_rows(x);
    if k > distinct {
        return Err(Error::RejectedInput(format!(
            "k = {k} exceeds the {distinct} distinct rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(x, k, &mut rng);
    let mut inertia_history = Vec::new();
    let (mut labels, mut inertia) = assign(x, &centroids);
    inertia_history.push(inertia);
    for _ in 0..max_iter {
        // Update step: per-cluster means; an emptied cluster keeps its
        // previous centroid.
        let d = x[0].len();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (row, &l) in x.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            }
        }
        let (new_labels, new_inertia) = assign(x, &centroids);
        inertia_history.push(new_inertia);
        let converged = new_labels == labels;
        labels = new_labels;
        inertia = new_inertia;
        if converged {
            break;
        }
    }
    let _ = inertia;
    Ok(KMeansFit {
        labeling: ClusterLabeling::new(labels.iter().map(|&l| l as i64).collect(), "kmeans"),
        centroids,
        inertia_history,
    })
}
