//! OPTICS density ordering with reachability-threshold cluster extraction.

use super::ClusterLabeling;
use crate::error::{Error, Result};
use crate::linalg::dist;

/// OPTICS output: the visit ordering, per-point reachability and core
/// distances, and the thresholded labeling.
#[derive(Debug, Clone)]
pub struct OpticsResult {
    pub labeling: ClusterLabeling,
    /// Points in processing order.
    pub ordering: Vec<usize>,
    /// Reachability distance per point index (infinite when undefined).
    pub reachability: Vec<f64>,
    /// Core distance per point index (infinite beyond `eps_max`).
    pub core_distances: Vec<f64>,
}

/// Runs OPTICS over `x`.
///
/// `core_distance(p)` is the distance to the `min_pts`-th nearest
/// neighbor, the point itself excluded, infinite when that neighbor lies
/// beyond `eps_max`. Clusters are the reachability valleys below
/// `reach_threshold`; points above it that are not core at the threshold
/// become noise.
pub fn optics(
    x: &[Vec<f64>],
    min_pts: usize,
    eps_max: f64,
    reach_threshold: f64,
) -> Result<OpticsResult> {
    if x.is_empty() {
        return Err(Error::RejectedInput("optics needs at least one point".into()));
    }
    if min_pts < 1 {
        return Err(Error::RejectedInput("min_pts must be >= 1".into()));
    }
    let n = x.len();

    // Dense distances; the expansion below is O(n^2) regardless.
    let mut core_distances = vec![f64::INFINITY; n];
    let mut dists: Vec<Vec<f64>> = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&x[i], &x[j]);
            dists[i][j] = d;
            dists[j][i] = d;
        }
    }
    for i in 0..n {
        let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dists[i][j]).collect();
        if others.len() >= min_pts {
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let kth = others[min_pts - 1];
            if kth <= eps_max {
                core_distances[i] = kth;
            }
        }
    }

    let mut processed = vec![false; n];
    let mut reachability = vec![f64::INFINITY; n];
    let mut ordering = Vec::with_capacity(n);
    // Candidate reachabilities for not-yet-processed points.
    let mut candidate = vec![f64::INFINITY; n];

    let update_neighbors = |p: usize,
                            candidate: &mut [f64],
                            processed: &[bool],
                            core_distances: &[f64],
                            dists: &[Vec<f64>]| {
        if core_distances[p].is_infinite() {
            return;
        }
        for o in 0..dists.len() {
            if processed[o] || dists[p][o] > eps_max {
                continue;
            }
            let new_reach = core_distances[p].max(dists[p][o]);
            if new_reach < candidate[o] {
                candidate[o] = new_reach;
            }
        }
    };

    for start in 0..n {
        if processed[start] {
            continue;
        }
        processed[start] = true;
        ordering.push(start);
        update_neighbors(start, &mut candidate, &processed, &core_distances, &dists);
        loop {
            // Next seed: smallest candidate reachability, lowest index ties.
            let mut next = None;
            let mut best = f64::INFINITY;
            for o in 0..n {
                if !processed[o] && candidate[o] < best {
                    best = candidate[o];
                    next = Some(o);
                }
            }
            let Some(o) = next else { break };
            processed[o] = true;
            reachability[o] = candidate[o];
            ordering.push(o);
            update_neighbors(o, &mut candidate, &processed, &core_distances, &dists);
        }
    }

    // Threshold extraction along the ordering.
    let mut labels = vec![-1i64; n];
    let mut current: i64 = -1;
    for &p in &ordering {
        if reachability[p] > reach_threshold {
            if core_distances[p] <= reach_threshold {
                current += 1;
                labels[p] = current;
            }
            // else: noise, stays -1
        } else if current >= 0 {
            labels[p] = current;
        } else {
            current = 0;
            labels[p] = 0;
        }
    }

    Ok(OpticsResult {
        labeling: ClusterLabeling::new(labels, "optics"),
        ordering,
        reachability,
        core_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn rows(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn core_distances_match_brute_force_knn() {
        // {0, 1, 5} with min_pts = 1: first NN distances are 1, 1, 4.
        let res = optics(&rows(&[0.0, 1.0, 5.0]), 1, f64::INFINITY, 2.0).unwrap();
        assert_eq!(res.core_distances, vec![1.0, 1.0, 4.0]);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let res = optics(&rows(&[2.0; 8]), 3, f64::INFINITY, 0.5).unwrap();
        assert_eq!(res.labeling.k_effective, 1);
        assert_eq!(res.labeling.noise_count(), 0);
        for &p in &res.ordering[1..] {
            assert_eq!(res.reachability[p], 0.0);
        }
    }

    #[test]
    fn two_far_blobs_two_clusters_no_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 0.3).unwrap();
        let mut x = Vec::new();
        for i in 0..60 {
            let offset = if i < 30 { 0.0 } else { 50.0 };
            x.push(vec![offset + normal.sample(&mut rng), normal.sample(&mut rng)]);
        }
        let res = optics(&x, 4, f64::INFINITY, 3.0).unwrap();
        assert_eq!(res.labeling.k_effective, 2);
        assert_eq!(res.labeling.noise_count(), 0);
        // Blob membership is consistent.
        let first = res.labeling.labels[0];
        assert!(res.labeling.labels[..30].iter().all(|&l| l == first));
        let second = res.labeling.labels[30];
        assert!(res.labeling.labels[30..].iter().all(|&l| l == second));
        assert_ne!(first, second);
    }

    #[test]
    fn far_outlier_is_noise() {
        let mut x = rows(&[0.0, 0.1, 0.2, 0.3, 0.4]);
        x.push(vec![100.0]);
        let res = optics(&x, 2, f64::INFINITY, 1.0).unwrap();
        assert_eq!(res.labeling.labels[5], -1);
        assert!(res.labeling.labels[..5].iter().all(|&l| l == 0));
    }

    #[test]
    fn eps_max_bounds_core_distance() {
        let res = optics(&rows(&[0.0, 1.0, 5.0]), 2, 2.0, 1.5).unwrap();
        // Second NN of every point is beyond eps_max = 2.
        assert!(res.core_distances.iter().all(|c| c.is_infinite()));
        assert_eq!(res.labeling.k_effective, 0);
        assert_eq!(res.labeling.noise_count(), 3);
    }

    #[test]
    fn deterministic_ordering() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![((i * 29) % 13) as f64]).collect();
        let a = optics(&x, 3, f64::INFINITY, 2.0).unwrap();
        let b = optics(&x, 3, f64::INFINITY, 2.0).unwrap();
        assert_eq!(a.ordering, b.ordering);
        assert_eq!(a.labeling, b.labeling);
    }
}
