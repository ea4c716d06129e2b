//! Random forest of CART classification trees (Gini criterion).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModelArtifact, ModelPayload};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    /// Minimum samples in each child of a split.
    pub min_leaf: usize,
    /// Reweight Gini by inverse class frequency.
    pub balanced_class_weights: bool,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 12,
            max_features: None,
            min_leaf: 1,
            balanced_class_weights: true,
            seed: 0,
        }
    }
}

/// One tree node; `feature < 0` marks a leaf. Weighted sample mass and
/// impurity stay in the artifact so impurity-decrease importances can be
/// recomputed from a reloaded model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Weighted positive-class fraction at the node.
    pub value: f64,
    pub weight: f64,
    pub impurity: f64,
    pub n_samples: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<TreeNode>,
    pub root: u32,
}

impl ClassificationTree {
    pub fn predict_row(&self, x: &FeatureMatrix, map: &[usize], row: usize) -> f64 {
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
pub struct RandomForestModel {
    pub params: RandomForestParams,
    pub n_features: usize,
    pub trees: Vec<ClassificationTree>,
}

impl RandomForestModel {
    pub fn predict_proba_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::RejectedInput("empty forest".into()));
        }
        let mut probs = vec![0.0; x.n_rows()];
        for tree in &self.trees {
            for (row, p) in probs.iter_mut().enumerate() {
                *p += tree.predict_row(x, map, row);
            }
        }
        let n = self.trees.len() as f64;
        for p in &mut probs {
            *p /= n;
        }
        Ok(probs)
    }

    /// Mean decrease in impurity per feature: for every split,
    /// `w*i(node) - w_l*i(left) - w_r*i(right)` normalized by the root
    /// weight, averaged over trees. Not normalized to sum 1; see the
    /// importance module for the reported table.
    pub fn impurity_importances(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for tree in &self.trees {
            let root_weight = tree.nodes[tree.root as usize].weight;
            for node in &tree.nodes {
                if node.feature < 0 {
                    continue;
                }
                let left = &tree.nodes[node.left as usize];
                let right = &tree.nodes[node.right as usize];
                let decrease = node.weight * node.impurity
                    - left.weight * left.impurity
                    - right.weight * right.impurity;
                total[node.feature as usize] += decrease / root_weight;
            }
        }
        for t in &mut total {
            *t /= self.trees.len() as f64;
        }
        total
    }
}

fn gini(w_pos: f64, w_total: f64) -> f64 {
    if w_total <= 0.0 {
        return 0.0;
    }
    let p = w_pos / w_total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

struct TreeBuilder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [bool],
    w_pos: f64,
    w_neg: f64,
    max_depth: usize,
    max_features: usize,
    min_leaf: usize,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    fn weight_of(&self, label: bool) -> f64 {
        if label {
            self.w_pos
        } else {
            self.w_neg
        }
    }

    fn build(&mut self, rows: &mut Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let mut w_pos = 0.0;
        let mut w_tot = 0.0;
        for &r in rows.iter() {
            let w = self.weight_of(self.y[r]);
            w_tot += w;
            if self.y[r] {
                w_pos += w;
            }
        }
        let impurity = gini(w_pos, w_tot);
        let value = if w_tot > 0.0 { w_pos / w_tot } else { 0.0 };
        let make_leaf = |nodes: &mut Vec<TreeNode>| {
            nodes.push(TreeNode {
                feature: -1,
                threshold: 0.0,
                left: 0,
                right: 0,
                value,
                weight: w_tot,
                impurity,
                n_samples: rows.len() as u32,
            });
            (nodes.len() - 1) as u32
        };
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf || impurity <= 0.0 {
            return make_leaf(&mut self.nodes);
        }

        // Candidate features: seeded partial shuffle, then sorted so the
        // scan order (and tie-breaking) is by feature index.
        let d = self.x.n_cols();
        let mut all: Vec<usize> = (0..d).collect();
        for i in 0..self.max_features.min(d) {
            let j = rng.random_range(i..d);
            all.swap(i, j);
        }
        let mut candidates = all[..self.max_features.min(d)].to_vec();
        candidates.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None;
        let mut scratch: Vec<(f64, bool)> = Vec::with_capacity(rows.len());
        for &f in &candidates {
            let col = self.x.col(f);
            scratch.clear();
            scratch.extend(rows.iter().map(|&r| (col[r], self.y[r])));
            scratch.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut wl_pos = 0.0;
            let mut wl_tot = 0.0;
            for i in 0..scratch.len() - 1 {
                let (v, label) = scratch[i];
                let w = self.weight_of(label);
                wl_tot += w;
                if label {
                    wl_pos += w;
                }
                let next_v = scratch[i + 1].0;
                if v == next_v {
                    continue;
                }
                let n_left = i + 1;
                let n_right = scratch.len() - n_left;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let wr_pos = w_pos - wl_pos;
                let wr_tot = w_tot - wl_tot;
                let gain = w_tot * impurity
                    - wl_tot * gini(wl_pos, wl_tot)
                    - wr_tot * gini(wr_pos, wr_tot);
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, 0.5 * (v + next_v)));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return make_leaf(&mut self.nodes);
        };
        let col = self.x.col(feature);
        let mut left_rows: Vec<usize> = rows.iter().copied().filter(|&r| col[r] <= threshold).collect();
        let mut right_rows: Vec<usize> = rows.iter().copied().filter(|&r| col[r] > threshold).collect();
        let n_samples = rows.len() as u32;
        rows.clear();
        rows.shrink_to_fit();
        let left = self.build(&mut left_rows, depth + 1, rng);
        let right = self.build(&mut right_rows, depth + 1, rng);
        self.nodes.push(TreeNode {
            feature: feature as i32,
            threshold,
            left,
            right,
            value,
            weight: w_tot,
            impurity,
            n_samples,
        });
        (self.nodes.len() - 1) as u32
    }
}

/// Trains a bagged random forest. Requires both classes in `y`.
pub fn train_random_forest(
    x: &FeatureMatrix,
    y: &[bool],
    params: &RandomForestParams,
) -> Result<ModelArtifact> {
    validate_classification_input(x, y)?;
    let n = x.n_rows();
    let d = x.n_cols();
    let n_pos = y.iter().filter(|&&l| l).count();
    let (w_pos, w_neg) = if params.balanced_class_weights {
        (n as f64 / (2.0 * n_pos as f64), n as f64 / (2.0 * (n - n_pos) as f64))
    } else {
        (1.0, 1.0)
    };
    let max_features = params
        .max_features
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);

    let trees: Vec<ClassificationTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(params.seed, t as u64));
            let mut rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y,
                w_pos,
                w_neg,
                max_depth: params.max_depth,
                max_features,
                min_leaf: params.min_leaf.max(1),
                nodes: Vec::new(),
            };
            let root = builder.build(&mut rows, 0, &mut rng);
            ClassificationTree { nodes: builder.nodes, root }
        })
        .collect();

    let model = RandomForestModel { params: *params, n_features: d, trees };
    let identity: Vec<usize> = (0..d).collect();
    let train_scores = model.predict_proba_mapped(x, &identity)?;
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.seed,
        &train_scores,
        Vec::new(),
        ModelPayload::Rf(model),
    ))
}

pub(crate) fn validate_classification_input(x: &FeatureMatrix, y: &[bool]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::RejectedInput(format!(
            "{} rows for {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::RejectedInput("empty design matrix".into()));
    }
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(Error::RejectedInput(
            "supervised training needs both classes present".into(),
        ));
    }
    Ok(())
}
