//! Hierarchical density-based clustering.
//!
//! Pipeline: core distances -> mutual reachability distances -> minimum
//! spanning tree (Prim on the implicit dense graph) -> single-linkage
//! dendrogram -> condensed tree at `min_cluster_size` -> cluster selection
//! by excess-of-mass stability. Points not covered by a selected cluster
//! are noise (-1).

use std::collections::VecDeque;

use super::ClusterLabeling;
use crate::error::{Error, Result};
use crate::linalg::dist;

/// One mutual-reachability MST edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// HDBSCAN output.
#[derive(Debug, Clone)]
pub struct HdbscanResult {
    pub labeling: ClusterLabeling,
    /// Stability of each output cluster, indexed by label.
    pub stabilities: Vec<f64>,
    /// The mutual-reachability MST (exposed for structural checks).
    pub mst: Vec<MstEdge>,
    /// Set when the input was smaller than `min_cluster_size` and
    /// everything was labeled noise.
    pub all_noise_warning: bool,
}

struct SltNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

#[derive(Debug, Clone, Copy)]
struct CondensedNode {
    node_id: usize,
    parent: usize,
    lambda_birth: f64,
    size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    next_label: usize,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..2 * n - 1).collect(),
            size: vec![1; 2 * n - 1],
            next_label: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges two roots under a fresh dendrogram label.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let label = self.next_label;
        self.next_label += 1;
        self.parent[a] = label;
        self.parent[b] = label;
        self.size[label] = self.size[a] + self.size[b];
        label
    }
}

/// Computes mutual reachability core distances: distance to the
/// `min_samples`-th nearest neighbor, self excluded.
fn core_distances(x: &[Vec<f64>], min_samples: usize, dists: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let k = min_samples.min(n - 1).max(1);
    (0..n)
        .map(|i| {
            let mut others: Vec<f64> =
                (0..n).filter(|&j| j != i).map(|j| dists[i][j]).collect();
            others.sort_by(|a, b| a.partial_cmp(b).unwrap());
            others[k - 1]
        })
        .collect()
}

fn prim_mst(n: usize, mrd: impl Fn(usize, usize) -> f64) -> Vec<MstEdge> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut mst = Vec::with_capacity(n - 1);
    let mut current = 0usize;
    for _ in 1..n {
        in_tree[current] = true;
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for o in 0..n {
            if in_tree[o] {
                continue;
            }
            let w = mrd(current, o);
            if w < best[o] {
                best[o] = w;
                best_from[o] = current;
            }
            if best[o] < next_dist {
                next_dist = best[o];
                next = o;
            }
        }
        mst.push(MstEdge { a: best_from[next], b: next, weight: next_dist });
        current = next;
    }
    mst
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Clusters `x` with the given minimum cluster size; `min_samples`
/// controls the core-distance neighborhood (defaults to
/// `min_cluster_size` at the call sites).
pub fn hdbscan(x: &[Vec<f64>], min_cluster_size: usize, min_samples: usize) -> Result<HdbscanResult> {
    if x.is_empty() {
        return Err(Error::RejectedInput("hdbscan needs at least one point".into()));
    }
    if min_cluster_size < 2 {
        return Err(Error::RejectedInput("min_cluster_size must be >= 2".into()));
    }
    let n = x.len();
    if n < min_cluster_size {
        return Ok(HdbscanResult {
            labeling: ClusterLabeling::new(vec![-1; n], "hdbscan"),
            stabilities: Vec::new(),
            mst: Vec::new(),
            all_noise_warning: true,
        });
    }

    let mut dists = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(&x[i], &x[j]);
            dists[i][j] = d;
            dists[j][i] = d;
        }
    }
    let core = core_distances(x, min_samples, &dists);
    let mut mst = prim_mst(n, |a, b| core[a].max(core[b]).max(dists[a][b]));
    mst.sort_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap());

    // Single-linkage dendrogram over the sorted MST edges.
    let mut uf = UnionFind::new(n);
    let mut slt: Vec<SltNode> = Vec::with_capacity(n - 1);
    for edge in &mst {
        let ra = uf.find(edge.a);
        let rb = uf.find(edge.b);
        let size = uf.size[ra] + uf.size[rb];
        slt.push(SltNode { left: ra, right: rb, distance: edge.weight, size });
        uf.union(ra, rb);
    }

    let condensed = condense_tree(&slt, n, min_cluster_size);
    let (labels, stabilities) = extract_labels(&condensed, n);

    Ok(HdbscanResult {
        labeling: ClusterLabeling::new(labels, "hdbscan"),
        stabilities,
        mst,
        all_noise_warning: false,
    })
}

/// Walks the dendrogram top-down, keeping only splits where both sides
/// reach `min_cluster_size`; smaller sides dissolve into point fall-outs
/// at the split's lambda.
fn condense_tree(slt: &[SltNode], n: usize, min_cluster_size: usize) -> Vec<CondensedNode> {
    let top = 2 * (n - 1);
    let mut condensed = Vec::new();
    if slt.is_empty() {
        return condensed;
    }
    // new ids: condensed cluster ids start at n (root = n).
    let mut new_ids = vec![usize::MAX; top + 1];
    new_ids[top] = n;
    let mut next_id = n + 1;
    let mut visited = vec![false; top + 1];

    let node_size = |id: usize| if id < n { 1 } else { slt[id - n].size };

    let mut queue = VecDeque::from([top]);
    while let Some(node_id) = queue.pop_front() {
        if visited[node_id] || node_id < n {
            continue;
        }
        visited[node_id] = true;
        let node = &slt[node_id - n];
        let lambda = lambda_of(node.distance);
        let left_big = node_size(node.left) >= min_cluster_size;
        let right_big = node_size(node.right) >= min_cluster_size;
        match (left_big, right_big) {
            (true, true) => {
                for child in [node.left, node.right] {
                    new_ids[child] = next_id;
                    condensed.push(CondensedNode {
                        node_id: next_id,
                        parent: new_ids[node_id],
                        lambda_birth: lambda,
                        size: node_size(child),
                    });
                    next_id += 1;
                    queue.push_back(child);
                }
            }
            (false, false) => {
                // Whole subtree dissolves into points at this lambda.
                for child in [node.left, node.right] {
                    dissolve(child, new_ids[node_id], lambda, slt, n, &mut condensed, &mut visited);
                }
            }
            (true, false) => {
                new_ids[node.left] = new_ids[node_id];
                queue.push_back(node.left);
                dissolve(node.right, new_ids[node_id], lambda, slt, n, &mut condensed, &mut visited);
            }
            (false, true) => {
                new_ids[node.right] = new_ids[node_id];
                queue.push_back(node.right);
                dissolve(node.left, new_ids[node_id], lambda, slt, n, &mut condensed, &mut visited);
            }
        }
    }
    condensed
}

/// Records every point under `root` as falling out of `parent` at
/// `lambda`.
fn dissolve(
    root: usize,
    parent: usize,
    lambda: f64,
    slt: &[SltNode],
    n: usize,
    condensed: &mut Vec<CondensedNode>,
    visited: &mut [bool],
) {
    let mut queue = VecDeque::from([root]);
    while let Some(id) = queue.pop_front() {
        if id < n {
            condensed.push(CondensedNode { node_id: id, parent, lambda_birth: lambda, size: 1 });
        } else {
            visited[id] = true;
            queue.push_back(slt[id - n].left);
            queue.push_back(slt[id - n].right);
        }
    }
}

fn stability_contribution(node_lambda: f64, birth: f64, size: usize) -> f64 {
    if node_lambda.is_infinite() && birth.is_infinite() {
        return 0.0;
    }
    (node_lambda - birth) * size as f64
}

/// Excess-of-mass cluster selection and point labeling. The root is
/// eligible only when its stability is infinite (every fall-out at zero
/// distance), which is the all-coincident degenerate case.
fn extract_labels(condensed: &[CondensedNode], n: usize) -> (Vec<i64>, Vec<f64>) {
    if condensed.is_empty() {
        return (vec![-1; n], Vec::new());
    }
    let max_id = condensed.iter().map(|c| c.node_id.max(c.parent)).max().unwrap();
    let mut birth = vec![0.0; max_id + 1];
    for c in condensed {
        if c.node_id >= n {
            birth[c.node_id] = c.lambda_birth;
        }
    }
    // birth[n] (root) stays 0.
    let mut cluster_ids: Vec<usize> = condensed
        .iter()
        .filter(|c| c.node_id >= n)
        .map(|c| c.node_id)
        .collect();
    cluster_ids.push(n);
    cluster_ids.sort_unstable();
    cluster_ids.dedup();

    let mut stability = vec![0.0; max_id + 1];
    for c in condensed {
        stability[c.parent] += stability_contribution(c.lambda_birth, birth[c.parent], c.size);
    }

    let mut selected = vec![false; max_id + 1];
    let mut propagated = stability.clone();
    for &cid in cluster_ids.iter().rev() {
        let child_sum: f64 = condensed
            .iter()
            .filter(|c| c.parent == cid && c.node_id >= n)
            .map(|c| propagated[c.node_id])
            .sum();
        let has_child_clusters = condensed.iter().any(|c| c.parent == cid && c.node_id >= n);
        let root_eligible = cid != n || stability[cid].is_infinite();
        if root_eligible && (!has_child_clusters || stability[cid] > child_sum) {
            selected[cid] = true;
            // Deselect descendants.
            let mut queue: VecDeque<usize> = VecDeque::from([cid]);
            while let Some(cur) = queue.pop_front() {
                for c in condensed.iter().filter(|c| c.parent == cur && c.node_id >= n) {
                    if selected[c.node_id] {
                        selected[c.node_id] = false;
                    }
                    queue.push_back(c.node_id);
                }
            }
        } else {
            // Parent loses: its children's mass propagates upward.
            propagated[cid] = child_sum;
        }
    }

    // Stable output ids in ascending condensed-id order.
    let winners: Vec<usize> = cluster_ids.iter().copied().filter(|&c| selected[c]).collect();
    let mut labels = vec![-1i64; n];
    let mut parent_of = vec![usize::MAX; max_id + 1];
    for c in condensed {
        parent_of[c.node_id] = c.parent;
    }
    for point in 0..n {
        let mut cur = if parent_of[point] == usize::MAX { continue } else { parent_of[point] };
        loop {
            if let Some(pos) = winners.iter().position(|&w| w == cur) {
                labels[point] = pos as i64;
                break;
            }
            if cur == n || parent_of.get(cur).copied().unwrap_or(usize::MAX) == usize::MAX {
                break;
            }
            cur = parent_of[cur];
        }
    }
    let stabilities: Vec<f64> = winners.iter().map(|&w| stability[w]).collect();
    (labels, stabilities)
}
