//! Gaussian mixture model fitted by expectation-maximization with full
//! covariances.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeans_pp_init;
use super::ClusterLabeling;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_solve};

const LN_2PI: f64 = 1.8378770664093453;

/// Fitted Gaussian mixture.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub labeling: ClusterLabeling,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// Full covariance matrix per component (`k x d x d`).
    pub covariances: Vec<Vec<Vec<f64>>>,
    /// Mean log-likelihood after each EM iteration; non-decreasing within
    /// solver slack.
    pub log_likelihood_history: Vec<f64>,
    /// Per-row responsibilities of the final model (`n x k`).
    pub responsibilities: Vec<Vec<f64>>,
}

struct Component {
    chol: Vec<Vec<f64>>,
    log_det: f64,
}

fn prepare_component(cov: &[Vec<f64>]) -> Result<Component> {
    let chol = cholesky(cov).map_err(|_| {
        Error::ConvergenceFailure("degenerate component covariance despite regularization".into())
    })?;
    let log_det = 2.0 * chol.iter().enumerate().map(|(i, row)| row[i].ln()).sum::<f64>();
    Ok(Component { chol, log_det })
}

fn log_gaussian(comp: &Component, mean: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    let centered: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let y = forward_solve(&comp.chol, &centered);
    let quad: f64 = y.iter().map(|v| v * v).sum();
    -0.5 * (d as f64 * LN_2PI + comp.log_det + quad)
}

/// Fits a `k`-component Gaussian mixture. `reg` is added to every
/// covariance diagonal each M-step. Labels are the argmax responsibility.
pub fn gmm_fit(
    x: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    reg: f64,
) -> Result<GmmFit> {
    if x.is_empty() || k == 0 {
        return Err(Error::RejectedInput("gmm needs data and k >= 1".into()));
    }
    if reg <= 0.0 {
        return Err(Error::RejectedInput("covariance regularization must be positive".into()));
    }
    let n = x.len();
    let d = x[0].len();
    if n < k {
        return Err(Error::RejectedInput(format!("{n} rows cannot support {k} components")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = kmeans_pp_init(x, k, &mut rng);
    let mut weights = vec![1.0 / k as f64; k];
    // Shared initial covariance: data covariance plus regularization.
    let grand_mean: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|row| row[j]).sum::<f64>() / n as f64)
        .collect();
    let mut base_cov = vec![vec![0.0; d]; d];
    for row in x {
        for i in 0..d {
            for j in 0..d {
                base_cov[i][j] += (row[i] - grand_mean[i]) * (row[j] - grand_mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            base_cov[i][j] /= n as f64;
        }
        base_cov[i][i] += reg;
    }
    let mut covariances = vec![base_cov; k];

    let mut resp = vec![vec![0.0; k]; n];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        // E-step.
        let comps: Vec<Component> =
            covariances.iter().map(|c| prepare_component(c)).collect::<Result<_>>()?;
        let mut ll = 0.0;
        for (i, row) in x.iter().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|c| weights[c].max(1e-300).ln() + log_gaussian(&comps[c], &means[c], row))
                .collect();
            let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logs.iter().map(|l| (l - max).exp()).sum();
            let log_norm = max + sum_exp.ln();
            ll += log_norm;
            for c in 0..k {
                resp[i][c] = (logs[c] - log_norm).exp();
            }
        }
        history.push(ll / n as f64);
        if history.len() >= 2 {
            let delta = history[history.len() - 1] - history[history.len() - 2];
            if delta.abs() < 1e-10 {
                break;
            }
        }

        // M-step.
        for c in 0..k {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            let nk = nk.max(1e-12);
            weights[c] = nk / n as f64;
            for j in 0..d {
                means[c][j] = x.iter().zip(&resp).map(|(row, r)| r[c] * row[j]).sum::<f64>() / nk;
            }
            let mut cov = vec![vec![0.0; d]; d];
            for (row, r) in x.iter().zip(&resp) {
                let w = r[c];
                for i in 0..d {
                    let di = row[i] - means[c][i];
                    for j in 0..d {
                        cov[i][j] += w * di * (row[j] - means[c][j]);
                    }
                }
            }
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] /= nk;
                }
                cov[i][i] += reg;
            }
            covariances[c] = cov;
        }
    }

    let labels: Vec<i64> = resp
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
                .map(|(c, _)| c as i64)
                .unwrap()
        })
        .collect();
    Ok(GmmFit {
        labeling: ClusterLabeling::new(labels, "gmm"),
        weights,
        means,
        covariances,
        log_likelihood_history: history,
        responsibilities: resp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn two_blobs(n_per: usize, separation: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        for i in 0..2 * n_per {
            let offset = if i < n_per { 0.0 } else { separation };
            x.push(vec![
                offset + normal.sample(&mut rng),
                offset + normal.sample(&mut rng),
            ]);
        }
        x
    }

    #[test]
    fn far_blobs_get_one_hot_responsibilities() {
        let x = two_blobs(50, 20.0, 1);
        let fit = gmm_fit(&x, 2, 1, 200, 1e-6).unwrap();
        for r in &fit.responsibilities {
            let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(max > 1.0 - 1e-6, "{r:?}");
        }
        assert_eq!(fit.labeling.k_effective, 2);
    }

    #[test]
    fn k1_recovers_sample_moments() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 9.0]];
        let fit = gmm_fit(&x, 1, 0, 100, 1e-9).unwrap();
        assert!((fit.means[0][0] - 3.0).abs() < 1e-9);
        assert!((fit.means[0][1] - 5.0).abs() < 1e-9);
        // Sample covariance (n denominator) plus reg on the diagonal.
        let expected_var0 = ((1.0f64 - 3.0).powi(2) + 0.0 + (5.0f64 - 3.0).powi(2)) / 3.0;
        assert!((fit.covariances[0][0][0] - expected_var0 - 1e-9).abs() < 1e-6);
    }

    #[test]
    fn log_likelihood_non_decreasing() {
        for seed in 0..5 {
            let x = two_blobs(40, 3.0, 100 + seed);
            let fit = gmm_fit(&x, 3, seed, 100, 1e-6).unwrap();
            for pair in fit.log_likelihood_history.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-9,
                    "seed {seed}: {:?}",
                    fit.log_likelihood_history
                );
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let x = two_blobs(30, 5.0, 2);
        let a = gmm_fit(&x, 2, 5, 50, 1e-6).unwrap();
        let b = gmm_fit(&x, 2, 5, 50, 1e-6).unwrap();
        assert_eq!(a.labeling, b.labeling);
        assert_eq!(a.means, b.means);
    }

    #[test]
    fn rejects_bad_reg() {
        let x = two_blobs(10, 5.0, 0);
        assert!(gmm_fit(&x, 2, 0, 10, 0.0).is_err());
    }
}
