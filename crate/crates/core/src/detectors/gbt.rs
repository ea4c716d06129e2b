//! Gradient-boosted regression trees with logistic loss.
//!
//! Each round fits a tree to the logistic-loss gradients/hessians of the
//! current margin (Newton leaves, XGBoost-style gain), scaled by the
//! learning rate. Probabilities are the sigmoid of the summed leaf values
//! plus a base score at the log-odds of the training prevalence.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rf::validate_classification_input;
use super::{ModelArtifact, ModelPayload};
use crate::data::FeatureMatrix;
use crate::error::Result;

const HESSIAN_EPS: f64 = 1e-12;
const MAX_LEAF_VALUE: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Row fraction drawn (without replacement) per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            min_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

/// Regression tree node; `feature < 0` marks a leaf whose `value` is the
/// learning-rate-scaled Newton step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
    pub root: u32,
}

impl RegressionTree {
    fn predict_row(&self, x: &FeatureMatrix, map: &[usize], row: usize) -> f64 {
        let mut node = &self.nodes[self.root as usize];
        while node.feature >= 0 {
            let v = x.col(map[node.feature as usize])[row];
            node = if v <= node.threshold {
                &self.nodes[node.left as usize]
            } else {
                &self.nodes[node.right as usize]
            };
        }
        node.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    pub params: GradientBoostingParams,
    pub n_features: usize,
    /// Log-odds of the training prevalence.
    pub base_score: f64,
    pub trees: Vec<RegressionTree>,
    /// Training log-loss after every round (index 0 = base model).
    pub train_log_loss: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl GradientBoostingModel {
    pub fn predict_margin_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        let mut margins = vec![self.base_score; x.n_rows()];
        for tree in &self.trees {
            for (row, m) in margins.iter_mut().enumerate() {
                *m += tree.predict_row(x, map, row);
            }
        }
        margins
    }

    pub fn predict_proba_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        self.predict_margin_mapped(x, map).into_iter().map(sigmoid).collect()
    }
}

struct GbtBuilder<'a> {
    x: &'a FeatureMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
    learning_rate: f64,
    nodes: Vec<RegNode>,
}

impl<'a> GbtBuilder<'a> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        (-g / (h + HESSIAN_EPS) * self.learning_rate).clamp(-MAX_LEAF_VALUE, MAX_LEAF_VALUE)
    }

    fn build(&mut self, rows: &mut Vec<usize>, depth: usize) -> u32 {
        let g_sum: f64 = rows.iter().map(|&r| self.grad[r]).sum();
        let h_sum: f64 = rows.iter().map(|&r| self.hess[r]).sum();
        let make_leaf = |nodes: &mut Vec<RegNode>, value: f64| {
            nodes.push(RegNode { feature: -1, threshold: 0.0, left: 0, right: 0, value });
            (nodes.len() - 1) as u32
        };
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            let v = self.leaf_value(g_sum, h_sum);
            return make_leaf(&mut self.nodes, v);
        }

        let parent_score = g_sum * g_sum / (h_sum + HESSIAN_EPS);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut scratch: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
        for f in 0..self.x.n_cols() {
            let col = self.x.col(f);
            scratch.clear();
            scratch.extend(rows.iter().map(|&r| (col[r], self.grad[r], self.hess[r])));
            scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut gl = 0.0;
            let mut hl = 0.0;
            for i in 0..scratch.len() - 1 {
                let (v, g, h) = scratch[i];
                gl += g;
                hl += h;
                let next_v = scratch[i + 1].0;
                if v == next_v {
                    continue;
                }
                let n_left = i + 1;
                let n_right = scratch.len() - n_left;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let gr = g_sum - gl;
                let hr = h_sum - hl;
                let gain = 0.5
                    * (gl * gl / (hl + HESSIAN_EPS) + gr * gr / (hr + HESSIAN_EPS)
                        - parent_score);
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, 0.5 * (v + next_v)));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            let v = self.leaf_value(g_sum, h_sum);
            return make_leaf(&mut self.nodes, v);
        };
        let col = self.x.col(feature);
        let mut left_rows: Vec<usize> =
            rows.iter().copied().filter(|&r| col[r] <= threshold).collect();
        let mut right_rows: Vec<usize> =
            rows.iter().copied().filter(|&r| col[r] > threshold).collect();
        rows.clear();
        rows.shrink_to_fit();
        let left = self.build(&mut left_rows, depth + 1);
        let right = self.build(&mut right_rows, depth + 1);
        self.nodes.push(RegNode {
            feature: feature as i32,
            threshold,
            left,
            right,
            value: 0.0,
        });
        (self.nodes.len() - 1) as u32
    }
}

fn log_loss(margins: &[f64], y: &[bool]) -> f64 {
    let mut total = 0.0;
    for (&m, &label) in margins.iter().zip(y) {
        let p = sigmoid(m).clamp(1e-12, 1.0 - 1e-12);
        total -= if label { p.ln() } else { (1.0 - p).ln() };
    }
    total / y.len() as f64
}

/// Trains a gradient-boosted classifier. Requires both classes in `y`.
pub fn train_gradient_boosting(
    x: &FeatureMatrix,
    y: &[bool],
    params: &GradientBoostingParams,
) -> Result<ModelArtifact> {
    validate_classification_input(x, y)?;
    let n = x.n_rows();
    let prevalence =
        (y.iter().filter(|&&l| l).count() as f64 / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (prevalence / (1.0 - prevalence)).ln();

    let mut margins = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut train_log_loss = vec![log_loss(&margins, y)];
    let subsample = params.subsample.clamp(0.0, 1.0);
    let sample_size = ((n as f64 * subsample).ceil() as usize).clamp(1, n);

    for round in 0..params.n_rounds {
        let grad: Vec<f64> = margins
            .iter()
            .zip(y)
            .map(|(&m, &label)| sigmoid(m) - if label { 1.0 } else { 0.0 })
            .collect();
        let hess: Vec<f64> = margins
            .iter()
            .map(|&m| {
                let p = sigmoid(m);
                p * (1.0 - p)
            })
            .collect();

        let mut rows: Vec<usize> = (0..n).collect();
        if sample_size < n {
            let mut rng =
                ChaCha8Rng::seed_from_u64(crate::derive_seed(params.seed, round as u64));
            for i in 0..sample_size {
                let j = rng.random_range(i..n);
                rows.swap(i, j);
            }
            rows.truncate(sample_size);
        }

        let mut builder = GbtBuilder {
            x,
            grad: &grad,
            hess: &hess,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf.max(1),
            learning_rate: params.learning_rate,
            nodes: Vec::new(),
        };
        let root = builder.build(&mut rows, 0);
        let tree = RegressionTree { nodes: builder.nodes, root };
        let identity: Vec<usize> = (0..x.n_cols()).collect();
        for (row, m) in margins.iter_mut().enumerate() {
            *m += tree.predict_row(x, &identity, row);
        }
        trees.push(tree);
        train_log_loss.push(log_loss(&margins, y));
    }

    let model = GradientBoostingModel {
        params: *params,
        n_features: x.n_cols(),
        base_score,
        trees,
        train_log_loss,
    };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = model.predict_proba_mapped(x, &identity);
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.seed,
        &train_scores,
        Vec::new(),
        ModelPayload::Gbt(model),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::roc_auc;
    use rand_distr::{Distribution, Normal};

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
        FeatureMatrix::from_columns(names, cols).unwrap()
    }

    fn separable_2d(seed: u64) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut c0 = Vec::new();
        let mut c1 = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            let label = i % 2 == 0;
            let offset = if label { 4.0 } else { -4.0 };
            c0.push(offset + normal.sample(&mut rng));
            c1.push(normal.sample(&mut rng));
            y.push(label);
        }
        (matrix(vec![c0, c1]), y)
    }

    #[test]
    fn separable_data_reaches_perfect_training_auc() {
        let (x, y) = separable_2d(1);
        let params = GradientBoostingParams { n_rounds: 50, seed: 1, ..Default::default() };
        let artifact = train_gradient_boosting(&x, &y, &params).unwrap();
        let probs = artifact.predict_proba(&x).unwrap();
        assert_eq!(roc_auc(&probs, &y).unwrap(), 1.0);
    }

    #[test]
    fn zero_learning_rate_gives_base_rate() {
        let (x, y) = separable_2d(2);
        let params = GradientBoostingParams {
            n_rounds: 10,
            learning_rate: 0.0,
            seed: 2,
            ..Default::default()
        };
        let artifact = train_gradient_boosting(&x, &y, &params).unwrap();
        let probs = artifact.predict_proba(&x).unwrap();
        let base_rate = y.iter().filter(|&&l| l).count() as f64 / y.len() as f64;
        for p in probs {
            assert!((p - base_rate).abs() < 1e-9);
        }
    }

    #[test]
    fn log_loss_monotone_per_round() {
        for seed in 0..10 {
            let (x, y) = separable_2d(100 + seed);
            let params = GradientBoostingParams {
                n_rounds: 30,
                max_depth: 3,
                seed,
                ..Default::default()
            };
            let artifact = train_gradient_boosting(&x, &y, &params).unwrap();
            let ModelPayload::Gbt(model) = &artifact.payload else { unreachable!() };
            for pair in model.train_log_loss.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-9,
                    "seed {seed}: {:?}",
                    model.train_log_loss
                );
            }
        }
    }

    #[test]
    fn deterministic_given_seed_with_subsampling() {
        let (x, y) = separable_2d(3);
        let params = GradientBoostingParams {
            n_rounds: 12,
            subsample: 0.7,
            seed: 7,
            ..Default::default()
        };
        let a = train_gradient_boosting(&x, &y, &params).unwrap();
        let b = train_gradient_boosting(&x, &y, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let x = matrix(vec![vec![1.0, 2.0]]);
        assert!(train_gradient_boosting(&x, &[false, false], &Default::default()).is_err());
    }
}
