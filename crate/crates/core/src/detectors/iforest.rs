//! Isolation forest: random axis-aligned splits isolate points; short
//! average path lengths mean anomalous.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelArtifact, ModelPayload};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.5772156649015329;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestParams {
    pub n_trees: usize,
    pub subsample_size: usize,
    pub seed: u64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self { n_trees: 100, subsample_size: 256, seed: 0 }
    }
}

/// `feature < 0` marks an external node of `size` training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoNode {
    pub feature: i32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub size: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoTree {
    pub nodes: Vec<IsoNode>,
    pub root: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForestModel {
    pub params: IsolationForestParams,
    /// Effective per-tree sample size after clamping to the data size.
    pub effective_subsample: usize,
    pub trees: Vec<IsoTree>,
}

/// Average unsuccessful-search path length in a binary search tree of `n`
/// external nodes: `2 H(n-1) - 2 (n-1)/n` with exact harmonic numbers.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = n - 1;
    let harmonic = if m <= 4096 {
        (1..=m).map(|i| 1.0 / i as f64).sum::<f64>()
    } else {
        (m as f64).ln() + EULER_GAMMA + 1.0 / (2.0 * m as f64)
    };
    2.0 * harmonic - 2.0 * m as f64 / n as f64
}

fn build_iso_tree(
    x: &FeatureMatrix,
    rows: &mut Vec<usize>,
    depth: usize,
    height_limit: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<IsoNode>,
) -> u32 {
    let size = rows.len() as u32;
    let external = |nodes: &mut Vec<IsoNode>| {
        nodes.push(IsoNode { feature: -1, threshold: 0.0, left: 0, right: 0, size });
        (nodes.len() - 1) as u32
    };
    if depth >= height_limit || rows.len() <= 1 {
        return external(nodes);
    }
    // Pick a feature with spread; identical values on every feature end
    // the branch.
    let d = x.n_cols();
    let start = rng.random_range(0..d);
    let mut chosen = None;
    for off in 0..d {
        let f = (start + off) % d;
        let col = x.col(f);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &r in rows.iter() {
            lo = lo.min(col[r]);
            hi = hi.max(col[r]);
        }
        if hi > lo {
            chosen = Some((f, lo, hi));
            break;
        }
    }
    let Some((feature, lo, hi)) = chosen else {
        return external(nodes);
    };
    let threshold = lo + rng.random::<f64>() * (hi - lo);
    let col = x.col(feature);
    let mut left_rows: Vec<usize> = rows.iter().copied().filter(|&r| col[r] < threshold).collect();
    let mut right_rows: Vec<usize> = rows.iter().copied().filter(|&r| col[r] >= threshold).collect();
    if left_rows.is_empty() || right_rows.is_empty() {
        return external(nodes);
    }
    rows.clear();
    let left = build_iso_tree(x, &mut left_rows, depth + 1, height_limit, rng, nodes);
    let right = build_iso_tree(x, &mut right_rows, depth + 1, height_limit, rng, nodes);
    nodes.push(IsoNode { feature: feature as i32, threshold, left, right, size });
    (nodes.len() - 1) as u32
}

impl IsoTree {
    /// Path length of a query: edges to its external node plus the
    /// average-path adjustment for the node's size.
    fn path_length(&self, x: &FeatureMatrix, map: &[usize], row: usize) -> f64 {
        let mut node = &self.nodes[self.root as usize];
        let mut depth = 0.0;
        while node.feature >= 0 {
            let v = x.col(map[node.feature as usize])[row];
            node = if v < node.threshold {
                &self.nodes[node.left as usize]
            } else {
                &self.nodes[node.right as usize]
            };
            depth += 1.0;
        }
        depth + average_path_length(node.size as usize)
    }
}

impl IsolationForestModel {
    pub fn score_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        let c = average_path_length(self.effective_subsample);
        let norm = if c > 0.0 { c } else { 1.0 };
        (0..x.n_rows())
            .map(|row| {
                let mean_path: f64 = self
                    .trees
                    .iter()
                    .map(|t| t.path_length(x, map, row))
                    .sum::<f64>()
                    / self.trees.len() as f64;
                2f64.powf(-mean_path / norm)
            })
            .collect()
    }
}

/// Trains an isolation forest; a subsample size above the data size is
/// clamped with a warning.
pub fn train_isolation_forest(
    x: &FeatureMatrix,
    params: &IsolationForestParams,
) -> Result<ModelArtifact> {
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::RejectedInput("empty design matrix".into()));
    }
    if params.n_trees == 0 {
        return Err(Error::RejectedInput("isolation forest needs at least one tree".into()));
    }
    let n = x.n_rows();
    let mut warnings = Vec::new();
    let effective = if params.subsample_size > n {
        warnings.push(format!(
            "subsample_size {} clamped to the {} available rows",
            params.subsample_size, n
        ));
        n
    } else {
        params.subsample_size.max(1)
    };
    let height_limit = (effective as f64).log2().ceil().max(1.0) as usize;

    let trees: Vec<IsoTree> = (0..params.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::derive_seed(params.seed, t as u64));
            // Subsample without replacement.
            let mut pool: Vec<usize> = (0..n).collect();
            for i in 0..effective {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            let mut rows = pool[..effective].to_vec();
            let mut nodes = Vec::new();
            let root = build_iso_tree(x, &mut rows, 0, height_limit, &mut rng, &mut nodes);
            IsoTree { nodes, root }
        })
        .collect();

    let model = IsolationForestModel { params: *params, effective_subsample: effective, trees };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = model.score_mapped(x, &identity);
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.seed,
        &train_scores,
        warnings,
        ModelPayload::Iforest(model),
    ))
}
