//! Segment maps, the F-ratio separability statistic, and the delta-F
//! index.
//!
//! The F-ratio is the one-way ANOVA statistic
//! `(SSB / (k - 1)) / (SSW / (N - k))`: between-group variance over
//! within-group variance. Delta-F compares two labelings of the same
//! values (conventionally a reachability-based labeling minus a
//! hierarchy-based one); a positive value means the first labeling
//! separates better.

use serde::{Deserialize, Serialize};

use crate::changepoint::CpList;
use crate::data::{FeatureColumn, FeatureOrigin, LabeledDataset};
use crate::error::{Error, Result};

/// Denominator floor for the F-ratio; hitting it sets the `capped` flag.
pub const F_RATIO_EPSILON: f64 = 1e-12;

/// Per-row segment ids derived from a change point list. Ids start at 0
/// and increment by exactly 1 at each change point row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMap {
    pub ids: Vec<usize>,
    pub boundaries: CpList,
}

impl SegmentMap {
    pub fn n_segments(&self) -> usize {
        self.ids.last().map_or(0, |&last| last + 1)
    }

    /// Row ranges `[lo, hi)` of each segment, in id order.
    pub fn segment_ranges(&self) -> Vec<(usize, usize)> {
        let n = self.ids.len();
        let mut ranges = Vec::with_capacity(self.n_segments());
        let mut start = 0;
        for row in 1..=n {
            if row == n || self.ids[row] != self.ids[start] {
                ranges.push((start, row));
                start = row;
            }
        }
        ranges
    }
}

/// Builds the segment map for `n_rows` rows: rows before the first change
/// point get id 0, and the id increments at each change point row.
pub fn assign_segments(cps: &CpList, n_rows: usize) -> Result<SegmentMap> {
    if let Some(&last) = cps.indices.last() {
        if last >= n_rows {
            return Err(Error::RejectedInput(format!(
                "change point {last} out of bounds for {n_rows} rows"
            )));
        }
    }
    let mut ids = Vec::with_capacity(n_rows);
    let mut current = 0usize;
    let mut next_cp = 0usize;
    for row in 0..n_rows {
        if next_cp < cps.indices.len() && cps.indices[next_cp] == row {
            current += 1;
            next_cp += 1;
        }
        ids.push(current);
    }
    // Normalize so the first segment is id 0 even when a cp sits at row 0.
    if let Some(&first) = ids.first() {
        if first > 0 {
            for id in &mut ids {
                *id -= first;
            }
        }
    }
    Ok(SegmentMap { ids, boundaries: cps.clone() })
}

/// One-way ANOVA F statistic with its degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub f_ratio: f64,
    pub between_df: usize,
    pub within_df: usize,
    /// True when the within-group term hit [`F_RATIO_EPSILON`].
    pub capped: bool,
}

/// Computes the ANOVA F-ratio of `values` grouped by `groups`. Rows with a
/// negative group id (noise) are excluded. Requires at least two non-empty
/// groups and more rows than groups.
pub fn f_ratio(values: &[f64], groups: &[i64]) -> Result<SegmentStats> {
    if values.len() != groups.len() {
        return Err(Error::RejectedInput(format!(
            "{} values for {} group ids",
            values.len(),
            groups.len()
        )));
    }
    let mut kept: Vec<(i64, f64)> = groups
        .iter()
        .zip(values)
        .filter(|(&g, _)| g >= 0)
        .map(|(&g, &v)| (g, v))
        .collect();
    kept.sort_by_key(|&(g, _)| g);

    let mut group_sums: Vec<(f64, usize)> = Vec::new();
    let mut current_group = None;
    for &(g, v) in &kept {
        if current_group != Some(g) {
            group_sums.push((0.0, 0));
            current_group = Some(g);
        }
        let last = group_sums.last_mut().unwrap();
        last.0 += v;
        last.1 += 1;
    }
    let k = group_sums.len();
    let n = kept.len();
    if k < 2 {
        return Err(Error::RejectedInput(format!(
            "f_ratio needs at least 2 groups, found {k}"
        )));
    }
    if n <= k {
        return Err(Error::RejectedInput(format!(
            "f_ratio needs more rows ({n}) than groups ({k})"
        )));
    }

    let grand_mean = kept.iter().map(|&(_, v)| v).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    for &(sum, count) in &group_sums {
        let mean = sum / count as f64;
        ssb += count as f64 * (mean - grand_mean).powi(2);
    }
    let mut ssw = 0.0;
    let mut means = std::collections::HashMap::new();
    {
        let mut idx = 0usize;
        let mut current = None;
        for &(g, _) in &kept {
            if current != Some(g) {
                means.insert(g, group_sums[idx].0 / group_sums[idx].1 as f64);
                idx += 1;
                current = Some(g);
            }
        }
    }
    for &(g, v) in &kept {
        ssw += (v - means[&g]).powi(2);
    }

    let between_df = k - 1;
    let within_df = n - k;
    let numerator = ssb / between_df as f64;
    let raw_denominator = ssw / within_df as f64;
    let capped = raw_denominator < F_RATIO_EPSILON;
    let denominator = raw_denominator.max(F_RATIO_EPSILON);
    Ok(SegmentStats { f_ratio: numerator / denominator, between_df, within_df, capped })
}

/// Difference of F-ratios under two labelings of the same values:
/// `F(values, labels_a) - F(values, labels_b)`. Noise rows (id -1) are
/// excluded per side. Returns `None` when either side has fewer than two
/// clusters after noise removal; callers emit 0 with a flag in that case.
pub fn delta_f(values: &[f64], labels_a: &[i64], labels_b: &[i64]) -> Result<Option<f64>> {
    if values.len() != labels_a.len() || values.len() != labels_b.len() {
        return Err(Error::RejectedInput(
            "delta_f labelings must cover the same rows as values".into(),
        ));
    }
    let fa = match f_ratio(values, labels_a) {
        Ok(stats) => stats.f_ratio,
        Err(Error::RejectedInput(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let fb = match f_ratio(values, labels_b) {
        Ok(stats) => stats.f_ratio,
        Err(Error::RejectedInput(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(fa - fb))
}

/// Summary of [`encode_segment_features`].
#[derive(Debug, Clone, Default)]
pub struct EncodeSummary {
    /// Channels whose delta-F was undefined and emitted as 0.
    pub undefined_delta_f: Vec<String>,
}

/// Adds `<channel>_segment` columns (and `<channel>_delta_f` columns when
/// per-channel delta-F values are supplied) to the dataset. An undefined
/// delta-F becomes a zero column and is reported in the summary.
pub fn encode_segment_features(
    dataset: &mut LabeledDataset,
    maps: &[(String, SegmentMap)],
    delta_f_values: Option<&[(String, Option<f64>)]>,
) -> Result<EncodeSummary> {
    let n_rows = dataset.n_rows();
    for (channel, map) in maps {
        if map.ids.len() != n_rows {
            return Err(Error::RejectedInput(format!(
                "segment map for {channel} has {} rows, dataset has {n_rows}",
                map.ids.len()
            )));
        }
        dataset.push_column(FeatureColumn {
            name: format!("{channel}_segment"),
            origin: FeatureOrigin::Segment,
            values: map.ids.iter().map(|&id| id as f64).collect(),
        })?;
    }
    let mut summary = EncodeSummary::default();
    if let Some(dfs) = delta_f_values {
        for (channel, df) in dfs {
            let value = match df {
                Some(v) => *v,
                None => {
                    summary.undefined_delta_f.push(channel.clone());
                    0.0
                }
            };
            dataset.push_column(FeatureColumn {
                name: format!("{channel}_delta_f"),
                origin: FeatureOrigin::DeltaF,
                values: vec![value; n_rows],
            })?;
        }
    }
    Ok(summary)
}

/// Row of the F-ratio report (`feature,f_ratio,capped`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FRatioReportRow {
    pub feature: String,
    pub f_ratio: f64,
    pub capped: bool,
}

/// Ranks feature columns by their F-ratio across the given grouping,
/// highest first. Columns where the F-ratio is undefined are skipped.
pub fn f_ratio_report(dataset: &LabeledDataset, groups: &[i64]) -> Result<Vec<FRatioReportRow>> {
    let mut rows = Vec::new();
    for col in &dataset.columns {
        if let Ok(stats) = f_ratio(&col.values, groups) {
            rows.push(FRatioReportRow {
                feature: col.name.clone(),
                f_ratio: stats.f_ratio,
                capped: stats.capped,
            });
        }
    }
    rows.sort_by(|a, b| b.f_ratio.partial_cmp(&a.f_ratio).unwrap());
    Ok(rows)
}
