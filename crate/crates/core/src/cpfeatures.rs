//! Per-timestamp statistical features derived from change points.
//!
//! For a timestamp `t`, let `c(t)` be the latest change point at or before
//! `t` and `p(t)` the change point preceding `c(t)` (or 0). The "pre-CP
//! window" is the segment `scores[p(t) .. c(t))`; its mean, max, and
//! sample standard deviation are piecewise constant between change points.
//! `dist_last_cp` is `t - c(t)` (with `c(t) = 0` when no change point has
//! occurred yet) and `cp_freq` counts change points inside the trailing
//! window `(t - w, t]`.

use std::ops::Range;

use crate::changepoint::CpList;
use crate::data::{FeatureColumn, FeatureOrigin, LabeledDataset};
use crate::error::{Error, Result};

/// The five change-point features for one timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpFeatureBlock {
    pub mean_score_pre_cp: f64,
    pub dist_last_cp: usize,
    pub max_score_pre_cp: f64,
    pub std_score_pre_cp: f64,
    pub cp_freq: usize,
}

/// Names of the five features, in emission order.
pub const CP_FEATURE_NAMES: [&str; 5] = [
    "mean_score_pre_cp",
    "dist_last_cp",
    "max_score_pre_cp",
    "std_score_pre_cp",
    "cp_freq",
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct WindowStats {
    mean: f64,
    max: f64,
    std: f64,
}

const ZERO_STATS: WindowStats = WindowStats { mean: 0.0, max: 0.0, std: 0.0 };

fn window_stats(scores: &[f64]) -> WindowStats {
    if scores.is_empty() {
        return ZERO_STATS;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Sample standard deviation (n-1); a single point has zero spread.
    let std = if scores.len() < 2 {
        0.0
    } else {
        (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    WindowStats { mean, max, std }
}

/// Computes the five features for every `t` in `t_range`.
///
/// `scores` are the stage-1 outlier scores aligned with the series that
/// produced `cps`; `freq_window` is the trailing window for `cp_freq`.
pub fn compute_cp_features(
    scores: &[f64],
    cps: &CpList,
    freq_window: usize,
    t_range: Range<usize>,
) -> Result<Vec<CpFeatureBlock>> {
    if freq_window == 0 {
        return Err(Error::RejectedInput("cp_freq window must be positive".into()));
    }
    if t_range.end > scores.len() {
        return Err(Error::RejectedInput(format!(
            "t range end {} exceeds series length {}",
            t_range.end,
            scores.len()
        )));
    }
    if let Some(&last) = cps.indices.last() {
        if last >= scores.len() {
            return Err(Error::RejectedInput(format!(
                "change point {last} out of bounds for {} scores",
                scores.len()
            )));
        }
    }

    // Pre-CP stats are constant between consecutive change points: compute
    // one WindowStats per change point up front.
    let per_cp: Vec<WindowStats> = cps
        .indices
        .iter()
        .enumerate()
        .map(|(i, &cp)| {
            let prev = if i == 0 { 0 } else { cps.indices[i - 1] };
            window_stats(&scores[prev..cp])
        })
        .collect();

    let mut out = Vec::with_capacity(t_range.len());
    for t in t_range {
        let n_at_or_before = cps.indices.partition_point(|&c| c <= t);
        let (stats, dist) = if n_at_or_before == 0 {
            (ZERO_STATS, t)
        } else {
            let c = cps.indices[n_at_or_before - 1];
            (per_cp[n_at_or_before - 1], t - c)
        };
        // cp_freq counts change points in (t - w, t]; a window reaching
        // past the origin counts everything up to t.
        let cp_freq = if t >= freq_window {
            n_at_or_before - cps.indices.partition_point(|&c| c <= t - freq_window)
        } else {
            n_at_or_before
        };
        out.push(CpFeatureBlock {
            mean_score_pre_cp: stats.mean,
            dist_last_cp: dist,
            max_score_pre_cp: stats.max,
            std_score_pre_cp: stats.std,
            cp_freq,
        });
    }
    Ok(out)
}

/// Appends the five feature columns for one channel to a dataset, named
/// `<channel>_<feature>`.
pub fn append_cp_feature_columns(
    dataset: &mut LabeledDataset,
    channel: &str,
    blocks: &[CpFeatureBlock],
) -> Result<()> {
    if blocks.len() != dataset.n_rows() {
        return Err(Error::RejectedInput(format!(
            "{} feature blocks for {} rows",
            blocks.len(),
            dataset.n_rows()
        )));
    }
    let columns: [(&str, Vec<f64>); 5] = [
        ("mean_score_pre_cp", blocks.iter().map(|b| b.mean_score_pre_cp).collect()),
        ("dist_last_cp", blocks.iter().map(|b| b.dist_last_cp as f64).collect()),
        ("max_score_pre_cp", blocks.iter().map(|b| b.max_score_pre_cp).collect()),
        ("std_score_pre_cp", blocks.iter().map(|b| b.std_score_pre_cp).collect()),
        ("cp_freq", blocks.iter().map(|b| b.cp_freq as f64).collect()),
    ];
    for (suffix, values) in columns {
        dataset.push_column(FeatureColumn {
            name: format!("{channel}_{suffix}"),
            origin: FeatureOrigin::CpFeature,
            values,
        })?;
    }
    Ok(())
}

/// Matches `name` against a glob-style pattern where `*` matches any run
/// of characters.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    fn inner(p: &[u8], n: &[u8]) -> bool {
        match p.first() {
            None => n.is_empty(),
            Some(b'*') => {
                (0..=n.len()).any(|skip| inner(&p[1..], &n[skip..]))
            }
            Some(&c) => n.first() == Some(&c) && inner(&p[1..], &n[1..]),
        }
    }
    inner(pattern.as_bytes(), name.as_bytes())
}

/// Keeps only the feature columns whose name matches at least one pattern.
/// Origin tags, labels, and timestamps are preserved.
pub fn select_features(dataset: &LabeledDataset, keep: &[String]) -> Result<LabeledDataset> {
    if keep.is_empty() {
        return Err(Error::RejectedInput("no keep patterns given".into()));
    }
    let columns: Vec<FeatureColumn> = dataset
        .columns
        .iter()
        .filter(|c| keep.iter().any(|p| glob_match(p, &c.name)))
        .cloned()
        .collect();
    if columns.is_empty() {
        return Err(Error::RejectedInput(format!(
            "no columns match the keep patterns {keep:?}"
        )));
    }
    Ok(LabeledDataset { columns, ..dataset.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::changepoint::ThresholdRule;
    use crate::data::{align_labels, LabelTimeline, TimeSeriesFrame};

    fn cps(indices: Vec<usize>) -> CpList {
        CpList { indices, rule: ThresholdRule::default() }
    }

    #[test]
    fn pre_cp_window_stats_hand_example() {
        // Scores [1,2,3] fill the window before the only change point at 3.
        let scores = [1.0, 2.0, 3.0, 9.0, 9.0];
        let blocks = compute_cp_features(&scores, &cps(vec![3]), 100, 0..5).unwrap();
        let b = blocks[4];
        assert_eq!(b.mean_score_pre_cp, 2.0);
        assert_eq!(b.max_score_pre_cp, 3.0);
        assert_eq!(b.std_score_pre_cp, 1.0);
        assert_eq!(b.dist_last_cp, 1);
    }

    #[test]
    fn no_changepoints_defaults() {
        let scores = vec![0.5; 60];
        let blocks = compute_cp_features(&scores, &cps(vec![]), 10, 0..60).unwrap();
        let b = blocks[57];
        assert_eq!(
            (b.mean_score_pre_cp, b.dist_last_cp, b.max_score_pre_cp, b.std_score_pre_cp, b.cp_freq),
            (0.0, 57, 0.0, 0.0, 0)
        );
    }

    #[test]
    fn cp_freq_counts_trailing_window() {
        let scores = vec![0.0; 500];
        let blocks = compute_cp_features(&scores, &cps(vec![100, 250, 300]), 200, 0..500).unwrap();
        // (200, 400] contains 250 and 300.
        assert_eq!(blocks[400].cp_freq, 2);
        // (100, 300] contains 250 and 300.
        assert_eq!(blocks[300].cp_freq, 2);
        // (0, 150] contains 100 only; index 0 is never a change point here.
        assert_eq!(blocks[150].cp_freq, 1);
        // Window extending past the origin counts all cps <= t.
        assert_eq!(blocks[120].cp_freq, 1);
    }

    #[test]
    fn dist_resets_at_cp_and_increments() {
        let scores = vec![0.0; 20];
        let blocks = compute_cp_features(&scores, &cps(vec![5, 12]), 100, 0..20).unwrap();
        assert_eq!(blocks[5].dist_last_cp, 0);
        assert_eq!(blocks[6].dist_last_cp, 1);
        assert_eq!(blocks[11].dist_last_cp, 6);
        assert_eq!(blocks[12].dist_last_cp, 0);
        assert_eq!(blocks[19].dist_last_cp, 7);
    }

    #[test]
    fn stats_piecewise_constant_between_cps() {
        let scores: Vec<f64> = (0..30).map(|i| (i as f64 * 0.7).sin()).collect();
        let blocks = compute_cp_features(&scores, &cps(vec![7, 19]), 100, 0..30).unwrap();
        for t in 7..19 {
            assert_eq!(blocks[t].mean_score_pre_cp, blocks[7].mean_score_pre_cp);
            assert_eq!(blocks[t].max_score_pre_cp, blocks[7].max_score_pre_cp);
            assert_eq!(blocks[t].std_score_pre_cp, blocks[7].std_score_pre_cp);
        }
        assert_ne!(blocks[19].mean_score_pre_cp, blocks[18].mean_score_pre_cp);
    }

    #[test]
    fn window_mean_bounded_by_min_max() {
        let scores: Vec<f64> = (0..200).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
        let cp_list = cps(vec![23, 61, 140]);
        let blocks = compute_cp_features(&scores, &cp_list, 50, 0..200).unwrap();
        for (i, &cp) in cp_list.indices.iter().enumerate() {
            let prev = if i == 0 { 0 } else { cp_list.indices[i - 1] };
            let window = &scores[prev..cp];
            let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
            let b = blocks[cp];
            assert!(lo <= b.mean_score_pre_cp && b.mean_score_pre_cp <= b.max_score_pre_cp);
        }
    }

    #[test]
    fn rejects_zero_window() {
        assert!(compute_cp_features(&[1.0, 2.0], &cps(vec![]), 0, 0..2).is_err());
    }

    #[test]
    fn glob_matching() {
        assert!(glob_match("*_score_pre_cp", "ch1_mean_score_pre_cp"));
        assert!(glob_match("ch1_*", "ch1_cp_freq"));
        assert!(glob_match("*", "anything"));
        assert!(!glob_match("*_segment", "ch1_cp_freq"));
    }

    fn toy_dataset() -> LabeledDataset {
        let timestamps: Vec<_> = (0..10)
            .map(|i| {
                crate::data::parse_instant("2024-01-01T00:00:00Z").unwrap()
                    + chrono::Duration::seconds(60 * i)
            })
            .collect();
        let frame = TimeSeriesFrame::new(
            timestamps,
            vec!["a".into()],
            vec![(0..10).map(|i| i as f64).collect()],
        )
        .unwrap();
        let mut ds = align_labels(&frame, &LabelTimeline::default()).unwrap().dataset;
        let scores = vec![0.0; 10];
        let blocks = compute_cp_features(&scores, &cps(vec![4]), 5, 0..10).unwrap();
        append_cp_feature_columns(&mut ds, "a", &blocks).unwrap();
        ds
    }

    #[test]
    fn select_keeps_three_discriminative_features() {
        let ds = toy_dataset();
        let kept = select_features(
            &ds,
            &[
                "*_mean_score_pre_cp".into(),
                "*_std_score_pre_cp".into(),
                "*_max_score_pre_cp".into(),
            ],
        )
        .unwrap();
        let names = kept.column_names();
        assert_eq!(
            names,
            vec!["a_mean_score_pre_cp", "a_max_score_pre_cp", "a_std_score_pre_cp"]
        );
        assert!(!names.contains(&"a_dist_last_cp"));
        assert!(!names.contains(&"a_cp_freq"));
    }

    #[test]
    fn select_all_is_identity() {
        let ds = toy_dataset();
        let kept = select_features(&ds, &["*".into()]).unwrap();
        assert_eq!(kept, ds);
    }

    #[test]
    fn select_no_match_rejected() {
        let ds = toy_dataset();
        assert!(select_features(&ds, &["zzz_*".into()]).is_err());
    }
}
