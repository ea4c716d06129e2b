//! Feature relevance: global random-forest importance (mean decrease in
//! impurity) and segment-level permutation importance.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::detectors::{ModelArtifact, ModelPayload};
use crate::error::{Error, Result};
use crate::evaluation::roc_auc;
use crate::segmentation::SegmentMap;

/// Scope of an importance row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Segment(usize),
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scope::Global => write!(f, "global"),
            Scope::Segment(id) => write!(f, "segment-{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub scope: Scope,
    pub feature: String,
    pub importance: f64,
    pub repetitions: usize,
    pub stderr: f64,
    /// Metric backing the row: "mdi", "auc_drop", or "accuracy_drop".
    pub metric: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub rows: Vec<ImportanceRow>,
    /// Segments skipped for lacking both classes (with the fallback off).
    pub skipped_segments: Vec<usize>,
}

impl ImportanceTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,feature,importance,stderr,repetitions\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.scope, row.feature, row.importance, row.stderr, row.repetitions
            ));
        }
        out
    }

    /// Rows sorted by importance, highest first.
    pub fn ranked(&self) -> Vec<&ImportanceRow> {
        let mut rows: Vec<&ImportanceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.importance.partial_cmp(&a.importance).unwrap());
        rows
    }
}

/// Global mean-decrease-in-impurity importances of a random forest,
/// normalized to sum 1.
pub fn mdi_importance(artifact: &ModelArtifact) -> Result<ImportanceTable> {
    let ModelPayload::Rf(model) = &artifact.payload else {
        return Err(Error::RejectedInput(format!(
            "mdi importance needs a random forest, found {}",
            artifact.kind()
        )));
    };
    let raw = model.impurity_importances();
    let total: f64 = raw.iter().sum();
    let rows = artifact
        .feature_names
        .iter()
        .zip(&raw)
        .map(|(name, &imp)| ImportanceRow {
            scope: Scope::Global,
            feature: name.clone(),
            importance: if total > 0.0 { imp / total } else { 0.0 },
            repetitions: 1,
            stderr: 0.0,
            metric: "mdi".into(),
        })
        .collect();
    Ok(ImportanceTable { rows, skipped_segments: Vec::new() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    /// Shuffle repetitions per (segment, feature) cell.
    pub repetitions: usize,
    /// Score single-class segments with an accuracy drop at the model's
    /// quantile threshold instead of skipping them.
    pub accuracy_fallback: bool,
    /// Expected anomaly rate backing the fallback threshold.
    pub expected_anomaly_rate: f64,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self { repetitions: 5, accuracy_fallback: false, expected_anomaly_rate: 0.01, seed: 0 }
    }
}

fn segment_metric(
    scores: &[f64],
    labels: &[bool],
    use_auc: bool,
    threshold: f64,
) -> Result<f64> {
    if use_auc {
        roc_auc(scores, labels)
    } else {
        let correct = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| (s >= threshold) == l)
            .count();
        Ok(correct as f64 / labels.len() as f64)
    }
}

/// Permutation importance computed within each segment: for every
/// (segment, feature) cell the feature's values are shuffled inside the
/// segment's rows only, and the importance is the mean drop of the
/// segment's metric over the repetitions.
pub fn permutation_importance_by_segment(
    artifact: &ModelArtifact,
    x: &FeatureMatrix,
    y: &[bool],
    map: &SegmentMap,
    config: &PermutationConfig,
) -> Result<ImportanceTable> {
    if config.repetitions < 1 {
        return Err(Error::RejectedInput("permutation needs at least 1 repetition".into()));
    }
    if map.ids.len() != x.n_rows() || y.len() != x.n_rows() {
        return Err(Error::RejectedInput(
            "segment map, labels, and features must cover the same rows".into(),
        ));
    }
    let mut table = ImportanceTable::default();
    for (segment_id, (lo, hi)) in map.segment_ranges().into_iter().enumerate() {
        let seg_x = x.slice_rows(lo, hi);
        let seg_y = &y[lo..hi];
        let n_pos = seg_y.iter().filter(|&&l| l).count();
        let single_class = n_pos == 0 || n_pos == seg_y.len();
        let (use_auc, metric_name) = if single_class {
            if !config.accuracy_fallback {
                table.skipped_segments.push(segment_id);
                continue;
            }
            (false, "accuracy_drop")
        } else {
            (true, "auc_drop")
        };
        let threshold = artifact.quantile_threshold(config.expected_anomaly_rate);
        let baseline_scores = artifact.score(&seg_x)?;
        let baseline = segment_metric(&baseline_scores, seg_y, use_auc, threshold)?;

        for (feature_idx, feature) in artifact.feature_names.iter().enumerate() {
            let cell_seed = crate::derive_seed(
                config.seed,
                (segment_id as u64) << 32 | feature_idx as u64,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
            let permutations: Vec<Vec<usize>> = (0..config.repetitions)
                .map(|_| {
                    let mut idx: Vec<usize> = (0..seg_x.n_rows()).collect();
                    for i in (1..idx.len()).rev() {
                        let j = rng.random_range(0..=i);
                        idx.swap(i, j);
                    }
                    idx
                })
                .collect();
            let drops = permutation_drops(
                artifact,
                &seg_x,
                seg_y,
                feature,
                &permutations,
                baseline,
                use_auc,
                threshold,
            )?;
            let mean = drops.iter().sum::<f64>() / drops.len() as f64;
            let stderr = if drops.len() < 2 {
                0.0
            } else {
                let var = drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
                    / (drops.len() - 1) as f64;
                (var / drops.len() as f64).sqrt()
            };
            table.rows.push(ImportanceRow {
                scope: Scope::Segment(segment_id),
                feature: feature.clone(),
                importance: mean,
                repetitions: config.repetitions,
                stderr,
                metric: metric_name.into(),
            });
        }
    }
    Ok(table)
}

/// Metric drops for one (segment, feature) cell under explicit
/// permutations; the identity permutation yields exactly zero drop.
#[allow(clippy::too_many_arguments)]
pub(crate) fn permutation_drops(
    artifact: &ModelArtifact,
    seg_x: &FeatureMatrix,
    seg_y: &[bool],
    feature: &str,
    permutations: &[Vec<usize>],
    baseline: f64,
    use_auc: bool,
    threshold: f64,
) -> Result<Vec<f64>> {
    let col_idx = seg_x
        .names()
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| Error::RejectedInput(format!("feature {feature:?} not in matrix")))?;
    let original = seg_x.col(col_idx).to_vec();
    let mut drops = Vec::with_capacity(permutations.len());
    let mut shuffled = seg_x.clone();
    for perm in permutations {
        let permuted: Vec<f64> = perm.iter().map(|&i| original[i]).collect();
        shuffled.replace_column(col_idx, permuted);
        let scores = artifact.score(&shuffled)?;
        let metric = segment_metric(&scores, seg_y, use_auc, threshold)?;
        drops.push(baseline - metric);
    }
    Ok(drops)
}

/// Category share matrix: importances summed per category (negatives
/// clamped to zero) and normalized per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    /// (category, global share, segment-level share).
    pub rows: Vec<(String, f64, f64)>,
    /// Features that matched no pattern and fell into `other`.
    pub uncategorized: Vec<String>,
}

/// Default category map: first matching pattern wins.
pub fn default_category_patterns() -> Vec<(String, String)> {
    vec![
        ("*_segment".into(), "segmented variables".into()),
        ("*_score_pre_cp".into(), "derived indicators".into()),
        ("*_dist_last_cp".into(), "derived indicators".into()),
        ("*_cp_freq".into(), "derived indicators".into()),
        ("*_delta_f".into(), "derived indicators".into()),
        ("*_subcluster".into(), "derived indicators".into()),
        ("*efficiency*".into(), "system efficiency".into()),
        ("*Efficiency*".into(), "system efficiency".into()),
        ("*".into(), "raw process variables".into()),
    ]
}

/// Aggregates a global table and a segment-level table into per-category
/// shares (one column each), normalized to sum 1 per column.
pub fn category_summary(
    global: &ImportanceTable,
    segment_level: &ImportanceTable,
    patterns: &[(String, String)],
) -> CategorySummary {
    let mut uncategorized = Vec::new();
    let mut categorize = |feature: &str| -> String {
        for (pattern, category) in patterns {
            if crate::cpfeatures::glob_match(pattern, feature) {
                return category.clone();
            }
        }
        uncategorized.push(feature.to_string());
        "other".into()
    };
    let mut categories: Vec<String> = Vec::new();
    let mut global_sum: Vec<f64> = Vec::new();
    let mut segment_sum: Vec<f64> = Vec::new();
    let add = |cat: String,
                   value: f64,
                   which: usize,
                   categories: &mut Vec<String>,
                   gs: &mut Vec<f64>,
                   ss: &mut Vec<f64>| {
        let idx = match categories.iter().position(|c| *c == cat) {
            Some(i) => i,
            None => {
                categories.push(cat);
                gs.push(0.0);
                ss.push(0.0);
                categories.len() - 1
            }
        };
        if which == 0 {
            gs[idx] += value.max(0.0);
        } else {
            ss[idx] += value.max(0.0);
        }
    };
    for row in &global.rows {
        let cat = categorize(&row.feature);
        add(cat, row.importance, 0, &mut categories, &mut global_sum, &mut segment_sum);
    }
    for row in &segment_level.rows {
        let cat = categorize(&row.feature);
        add(cat, row.importance, 1, &mut categories, &mut global_sum, &mut segment_sum);
    }
    let g_total: f64 = global_sum.iter().sum();
    let s_total: f64 = segment_sum.iter().sum();
    let rows = categories
        .into_iter()
        .enumerate()
        .map(|(i, cat)| {
            (
                cat,
                if g_total > 0.0 { global_sum[i] / g_total } else { 0.0 },
                if s_total > 0.0 { segment_sum[i] / s_total } else { 0.0 },
            )
        })
        .collect();
    uncategorized.sort();
    uncategorized.dedup();
    CategorySummary { rows, uncategorized }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::changepoint::{CpList, ThresholdRule};
    use crate::detectors::{train_random_forest, RandomForestParams};
    use crate::segmentation::assign_segments;
    use rand_distr::{Distribution, Normal};

    /// One informative column plus noise columns; labels follow the
    /// informative one.
    fn planted_dataset(n: usize, n_noise: usize, seed: u64) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut informative = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 4 == 0;
            informative.push(if label { 3.0 } else { 0.0 } + 0.3 * normal.sample(&mut rng));
            y.push(label);
        }
        let mut names = vec!["informative".to_string()];
        let mut cols = vec![informative];
        for j in 0..n_noise {
            names.push(format!("noise{j}"));
            cols.push((0..n).map(|_| normal.sample(&mut rng)).collect());
        }
        (FeatureMatrix::from_columns(names, cols).unwrap(), y)
    }

    fn quick_rf(seed: u64) -> RandomForestParams {
        RandomForestParams { n_trees: 20, max_depth: 6, seed, ..Default::default() }
    }

    #[test]
    fn mdi_sums_to_one_and_ranks_informative_first() {
        let mut wins = 0;
        for seed in 0..20 {
            let (x, y) = planted_dataset(240, 5, seed);
            let artifact = train_random_forest(&x, &y, &quick_rf(seed)).unwrap();
            let table = mdi_importance(&artifact).unwrap();
            let total: f64 = table.rows.iter().map(|r| r.importance).sum();
            assert!((total - 1.0).abs() < 1e-9, "seed {seed}: sum {total}");
            if table.ranked()[0].feature == "informative" {
                wins += 1;
            }
        }
        assert!(wins >= 19, "informative ranked first in only {wins}/20 runs");
    }

    #[test]
    fn never_split_feature_importance_zero() {
        let (x, y) = planted_dataset(200, 1, 3);
        // Constant column can never split.
        let mut cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|c| x.col(c).to_vec()).collect();
        let mut names: Vec<String> = x.names().to_vec();
        names.push("constant".into());
        cols.push(vec![5.0; 200]);
        let x = FeatureMatrix::from_columns(names, cols).unwrap();
        let artifact = train_random_forest(&x, &y, &quick_rf(3)).unwrap();
        let table = mdi_importance(&artifact).unwrap();
        let row = table.rows.iter().find(|r| r.feature == "constant").unwrap();
        assert_eq!(row.importance, 0.0);
    }

    #[test]
    fn mdi_rejects_non_rf() {
        let (x, _) = planted_dataset(50, 1, 0);
        let artifact =
            crate::detectors::fit_pca(&x, &crate::detectors::PcaParams::default()).unwrap();
        assert!(mdi_importance(&artifact).is_err());
    }

    fn two_segment_map(n: usize) -> SegmentMap {
        let cps = CpList { indices: vec![n / 2], rule: ThresholdRule::default() };
        assign_segments(&cps, n).unwrap()
    }

    #[test]
    fn permutation_zero_for_identity_permutation() {
        let (x, y) = planted_dataset(120, 2, 1);
        let artifact = train_random_forest(&x, &y, &quick_rf(1)).unwrap();
        let seg = x.slice_rows(0, 60);
        let baseline_scores = artifact.score(&seg).unwrap();
        let baseline = roc_auc(&baseline_scores, &y[..60]).unwrap();
        let identity: Vec<usize> = (0..60).collect();
        let drops = permutation_drops(
            &artifact,
            &seg,
            &y[..60],
            "informative",
            &[identity],
            baseline,
            true,
            0.5,
        )
        .unwrap();
        assert_eq!(drops, vec![0.0]);
    }

    #[test]
    fn informative_feature_dominates_within_segments() {
        let mut wins = 0;
        for seed in 0..20 {
            let (x, y) = planted_dataset(240, 4, 50 + seed);
            let artifact = train_random_forest(&x, &y, &quick_rf(seed)).unwrap();
            let map = two_segment_map(240);
            let config = PermutationConfig { repetitions: 3, seed, ..Default::default() };
            let table =
                permutation_importance_by_segment(&artifact, &x, &y, &map, &config).unwrap();
            // The informative feature must beat every noise feature within
            // each scored segment.
            let ok = [0usize, 1].iter().all(|&s| {
                let seg_rows: Vec<&ImportanceRow> = table
                    .rows
                    .iter()
                    .filter(|r| r.scope == Scope::Segment(s))
                    .collect();
                if seg_rows.is_empty() {
                    return true;
                }
                let inf = seg_rows.iter().find(|r| r.feature == "informative").unwrap();
                seg_rows
                    .iter()
                    .filter(|r| r.feature != "informative")
                    .all(|r| r.importance < inf.importance)
            });
            if ok {
                wins += 1;
            }
        }
        assert!(wins >= 19, "informative dominated in only {wins}/20 runs");
    }

    #[test]
    fn perfect_feature_importance_near_half_on_balanced_segment() {
        // Baseline AUC 1.0; shuffling a perfectly predictive feature sends
        // the segment AUC to 0.5 in expectation, so the drop is ~0.5.
        let n = 200;
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let perfect: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        let x = FeatureMatrix::from_columns(vec!["perfect".into()], vec![perfect]).unwrap();
        let artifact = train_random_forest(&x, &labels, &quick_rf(2)).unwrap();
        let map = two_segment_map(n);
        let config = PermutationConfig { repetitions: 20, seed: 2, ..Default::default() };
        let table = permutation_importance_by_segment(&artifact, &x, &labels, &map, &config).unwrap();
        for row in &table.rows {
            assert!(
                (row.importance - 0.5).abs() < 0.1,
                "{:?} importance {}",
                row.scope,
                row.importance
            );
        }
    }

    #[test]
    fn permutation_isolated_to_its_segment() {
        // Permuting inside segment 0 never changes the metric of segment 1:
        // scores are per-row functions, so this checks the permutation is
        // local.
        let (x, y) = planted_dataset(120, 2, 9);
        let artifact = train_random_forest(&x, &y, &quick_rf(9)).unwrap();
        let other = x.slice_rows(60, 120);
        let before = artifact.score(&other).unwrap();
        // Shuffle feature 0 inside rows 0..60 only.
        let mut cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|c| x.col(c).to_vec()).collect();
        cols[0][..60].reverse();
        let shuffled =
            FeatureMatrix::from_columns(x.names().to_vec(), cols).unwrap();
        let after = artifact.score(&shuffled.slice_rows(60, 120)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn single_class_segments_skipped_or_fall_back() {
        let (x, mut y) = planted_dataset(120, 2, 4);
        for l in y.iter_mut().take(60) {
            *l = false; // first segment single-class
        }
        if y[60..].iter().all(|&l| !l) {
            y[61] = true;
        }
        let artifact = train_random_forest(&x, &y, &quick_rf(4)).unwrap();
        let map = two_segment_map(120);
        let config = PermutationConfig { repetitions: 2, seed: 4, ..Default::default() };
        let table = permutation_importance_by_segment(&artifact, &x, &y, &map, &config).unwrap();
        assert_eq!(table.skipped_segments, vec![0]);
        assert!(table.rows.iter().all(|r| r.scope == Scope::Segment(1)));

        let with_fallback = PermutationConfig {
            repetitions: 2,
            accuracy_fallback: true,
            seed: 4,
            ..Default::default()
        };
        let table =
            permutation_importance_by_segment(&artifact, &x, &y, &map, &with_fallback).unwrap();
        assert!(table.skipped_segments.is_empty());
        assert!(table
            .rows
            .iter()
            .any(|r| r.scope == Scope::Segment(0) && r.metric == "accuracy_drop"));
    }

    #[test]
    fn stderr_shrinks_with_more_repetitions() {
        let (x, y) = planted_dataset(160, 3, 6);
        let artifact = train_random_forest(&x, &y, &quick_rf(6)).unwrap();
        let map = two_segment_map(160);
        let mean_stderr = |reps: usize| {
            let config = PermutationConfig { repetitions: reps, seed: 6, ..Default::default() };
            let table =
                permutation_importance_by_segment(&artifact, &x, &y, &map, &config).unwrap();
            table.rows.iter().map(|r| r.stderr).sum::<f64>() / table.rows.len() as f64
        };
        // Non-strict sanity: more repetitions should not inflate the
        // standard error.
        assert!(mean_stderr(10) <= mean_stderr(2) + 1e-6);
    }

    #[test]
    fn duplicated_feature_splits_importance() {
        let (x, y) = planted_dataset(240, 3, 12);
        let mut names: Vec<String> = x.names().to_vec();
        let mut cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|c| x.col(c).to_vec()).collect();
        names.push("informative_copy".into());
        cols.push(x.col(0).to_vec());
        let dup = FeatureMatrix::from_columns(names, cols).unwrap();

        // Examine every feature at every split so the candidate pool is
        // identical with and without the duplicate.
        let mut params = quick_rf(12);
        params.max_features = Some(dup.n_cols());
        let single = train_random_forest(&x, &y, &params).unwrap();
        let doubled = train_random_forest(&dup, &y, &params).unwrap();
        let imp_single = mdi_importance(&single).unwrap();
        let imp_double = mdi_importance(&doubled).unwrap();
        let single_share = imp_single
            .rows
            .iter()
            .find(|r| r.feature == "informative")
            .unwrap()
            .importance;
        let pair_share: f64 = imp_double
            .rows
            .iter()
            .filter(|r| r.feature.starts_with("informative"))
            .map(|r| r.importance)
            .sum();
        assert!(
            (pair_share - single_share).abs() < 0.05,
            "pair {pair_share} vs single {single_share}"
        );
    }

    #[test]
    fn category_shares_normalize_per_column() {
        let global = ImportanceTable {
            rows: vec![
                ImportanceRow {
                    scope: Scope::Global,
                    feature: "ch1_segment".into(),
                    importance: 3.0,
                    repetitions: 1,
                    stderr: 0.0,
                    metric: "mdi".into(),
                },
                ImportanceRow {
                    scope: Scope::Global,
                    feature: "ch1".into(),
                    importance: 1.0,
                    repetitions: 1,
                    stderr: 0.0,
                    metric: "mdi".into(),
                },
            ],
            skipped_segments: Vec::new(),
        };
        let summary =
            category_summary(&global, &ImportanceTable::default(), &default_category_patterns());
        let seg = summary.rows.iter().find(|(c, _, _)| c == "segmented variables").unwrap();
        let raw = summary.rows.iter().find(|(c, _, _)| c == "raw process variables").unwrap();
        assert!((seg.1 - 0.75).abs() < 1e-12);
        assert!((raw.1 - 0.25).abs() < 1e-12);
        assert!(summary.uncategorized.is_empty());
    }

    #[test]
    fn all_one_category_yields_unit_share() {
        let global = ImportanceTable {
            rows: vec![ImportanceRow {
                scope: Scope::Global,
                feature: "a_segment".into(),
                importance: 0.4,
                repetitions: 1,
                stderr: 0.0,
                metric: "mdi".into(),
            }],
            skipped_segments: Vec::new(),
        };
        let summary =
            category_summary(&global, &ImportanceTable::default(), &default_category_patterns());
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.rows[0].1, 1.0);
    }

    #[test]
    fn unmatched_features_fall_into_other() {
        let patterns = vec![("*_segment".to_string(), "segmented variables".to_string())];
        let global = ImportanceTable {
            rows: vec![ImportanceRow {
                scope: Scope::Global,
                feature: "mystery".into(),
                importance: 1.0,
                repetitions: 1,
                stderr: 0.0,
                metric: "mdi".into(),
            }],
            skipped_segments: Vec::new(),
        };
        let summary = category_summary(&global, &ImportanceTable::default(), &patterns);
        assert_eq!(summary.uncategorized, vec!["mystery".to_string()]);
        assert!(summary.rows.iter().any(|(c, g, _)| c == "other" && *g == 1.0));
    }
}
