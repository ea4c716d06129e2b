//! One-class SVM with RBF kernel, solved in the nu-parameterized dual by
//! pairwise coordinate ascent (SMO-style working-set selection).
//!
//! Dual problem: minimize `0.5 a' K a` subject to `0 <= a_i <= 1/(nu n)`
//! and `sum a = 1`. The decision function is
//! `f(x) = sum_i a_i K(x_i, x) - rho`; the anomaly score is `-f(x)`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelArtifact, ModelPayload};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::sq_dist;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcsvmParams {
    /// Upper bound on the training outlier fraction, lower bound on the
    /// support-vector fraction.
    pub nu: f64,
    /// RBF width; `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    /// KKT gap tolerance.
    pub tol: f64,
    /// Hard cap on optimization iterations (pair updates).
    pub max_iter: usize,
    /// Training rows above this cap are subsampled (seeded, uniform).
    pub train_cap: usize,
    pub seed: u64,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        Self { nu: 0.1, gamma: None, tol: 1e-4, max_iter: 200_000, train_cap: 5000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassSvmModel {
    pub params: OcsvmParams,
    pub gamma: f64,
    /// Support vectors (rows with positive alpha).
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub rho: f64,
    /// Final KKT gap at convergence.
    pub kkt_gap: f64,
    /// Dual objective (`-0.5 a' K a`) sampled once per sweep.
    pub objective_history: Vec<f64>,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

impl OneClassSvmModel {
    /// Decision function `f(x)`; negative means anomalous.
    pub fn decision_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        let mut buf = Vec::with_capacity(map.len());
        (0..x.n_rows())
            .map(|row| {
                buf.clear();
                buf.extend(map.iter().map(|&c| x.col(c)[row]));
                let k_sum: f64 = self
                    .support_vectors
                    .iter()
                    .zip(&self.alphas)
                    .map(|(sv, &a)| a * rbf(sv, &buf, self.gamma))
                    .sum();
                k_sum - self.rho
            })
            .collect()
    }

    /// Anomaly score: `-f(x)`, higher = more anomalous.
    pub fn score_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        self.decision_mapped(x, map).into_iter().map(|f| -f).collect()
    }
}

/// Trains a nu-one-class SVM on the rows of `x`.
pub fn train_ocsvm(x: &FeatureMatrix, params: &OcsvmParams) -> Result<ModelArtifact> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::RejectedInput("empty design matrix".into()));
    }
    if !(0.0 < params.nu && params.nu <= 1.0) {
        return Err(Error::RejectedInput("nu must lie in (0, 1]".into()));
    }
    let gamma = params.gamma.unwrap_or(1.0 / x.n_cols() as f64);
    if gamma <= 0.0 {
        return Err(Error::RejectedInput("gamma must be positive".into()));
    }

    let mut warnings = Vec::new();
    let all_rows = x.rows();
    let rows: Vec<Vec<f64>> = if all_rows.len() > params.train_cap {
        warnings.push(format!(
            "training set of {} rows subsampled to the {} cap",
            all_rows.len(),
            params.train_cap
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(params.seed, 0xc0de));
        let mut idx: Vec<usize> = (0..all_rows.len()).collect();
        for i in 0..params.train_cap {
            let j = rng.random_range(i..all_rows.len());
            idx.swap(i, j);
        }
        idx.truncate(params.train_cap);
        idx.sort_unstable();
        idx.into_iter().map(|i| all_rows[i].clone()).collect()
    } else {
        all_rows
    };

    let n = rows.len();
    let upper = 1.0 / (params.nu * n as f64);

    // Feasible start: spread unit mass over the first ceil(nu n) points.
    let mut alpha = vec![0.0; n];
    let full = (params.nu * n as f64).floor() as usize;
    for a in alpha.iter_mut().take(full) {
        *a = upper;
    }
    if full < n {
        alpha[full] = 1.0 - full as f64 * upper;
    }

    // Kernel rows on demand with a bounded cache.
    let mut cache: std::collections::HashMap<usize, Vec<f64>> = std::collections::HashMap::new();
    let mut cache_order: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    const CACHE_CAP: usize = 512;
    let kernel_row = |i: usize,
                          cache: &mut std::collections::HashMap<usize, Vec<f64>>,
                          cache_order: &mut std::collections::VecDeque<usize>|
     -> Vec<f64> {
        if let Some(row) = cache.get(&i) {
            return row.clone();
        }
        let row: Vec<f64> = rows.iter().map(|r| rbf(&rows[i], r, gamma)).collect();
        if cache.len() >= CACHE_CAP {
            if let Some(evict) = cache_order.pop_front() {
                cache.remove(&evict);
            }
        }
        cache.insert(i, row.clone());
        cache_order.push_back(i);
        row
    };

    // Gradient of 0.5 a'Ka is Ka.
    let mut grad = vec![0.0; n];
    for i in 0..n {
        if alpha[i] > 0.0 {
            let row = kernel_row(i, &mut cache, &mut cache_order);
            for (g, k) in grad.iter_mut().zip(&row) {
                *g += alpha[i] * k;
            }
        }
    }
    let mut objective: f64 = -0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    let mut objective_history = vec![objective];

    let mut kkt_gap = f64::INFINITY;
    let mut converged = false;
    let sweep = n.max(64);
    for iter in 0..params.max_iter {
        // Maximal-violation pair: the largest gradient among movable-up
        // alphas vs the smallest among movable-down ones.
        let mut i_low = None; // alpha > 0, can decrease; max gradient
        let mut i_up = None; // alpha < C, can increase; min gradient
        for i in 0..n {
            if alpha[i] > 0.0 && i_low.is_none_or(|j: usize| grad[i] > grad[j]) {
                i_low = Some(i);
            }
            if alpha[i] < upper && i_up.is_none_or(|j: usize| grad[i] < grad[j]) {
                i_up = Some(i);
            }
        }
        let (Some(lo), Some(up)) = (i_low, i_up) else { break };
        kkt_gap = grad[lo] - grad[up];
        if kkt_gap <= params.tol {
            converged = true;
            break;
        }

        // Move mass t from `lo` to `up`, minimizing along the segment.
        let k_lo = kernel_row(lo, &mut cache, &mut cache_order);
        let k_up = kernel_row(up, &mut cache, &mut cache_order);
        let eta = k_lo[lo] + k_up[up] - 2.0 * k_lo[up];
        let mut t = if eta > 1e-15 { kkt_gap / eta } else { f64::INFINITY };
        t = t.min(alpha[lo]).min(upper - alpha[up]);
        if t <= 0.0 {
            break;
        }
        alpha[lo] -= t;
        alpha[up] += t;
        // For W = 0.5 a'Ka the step changes W by -t*gap + 0.5 t^2 eta;
        // the stored objective is -W, so it gains t*gap - 0.5 t^2 eta.
        objective += t * kkt_gap - 0.5 * t * t * eta;
        for i in 0..n {
            grad[i] += t * (k_up[i] - k_lo[i]);
        }
        if (iter + 1) % sweep == 0 {
            objective_history.push(objective);
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(format!(
            "ocsvm stopped after {} iterations with KKT gap {kkt_gap:.3e} > tol {:.1e}",
            params.max_iter, params.tol
        )));
    }
    objective_history.push(objective);

    // rho: mean gradient over free support vectors, midpoint fallback.
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > 1e-12 && alpha[i] < upper - 1e-12)
        .collect();
    let rho = if free.is_empty() {
        let m = (0..n).filter(|&i| alpha[i] > 1e-12).map(|i| grad[i]).fold(f64::NEG_INFINITY, f64::max);
        let mm = (0..n).filter(|&i| alpha[i] < upper - 1e-12).map(|i| grad[i]).fold(f64::INFINITY, f64::min);
        0.5 * (m + mm)
    } else {
        free.iter().map(|&i| grad[i]).sum::<f64>() / free.len() as f64
    };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        if a > 1e-12 {
            support_vectors.push(rows[i].clone());
            alphas.push(a);
        }
    }
    let model = OneClassSvmModel {
        params: *params,
        gamma,
        support_vectors,
        alphas,
        rho,
        kkt_gap,
        objective_history,
    };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = model.score_mapped(x, &identity);
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.seed,
        &train_scores,
        warnings,
        ModelPayload::Ocsvm(model),
    ))
}
