//! Detection metrics: ranking metrics (ROC AUC, average precision),
//! thresholded precision/recall/F1, and the early-detection measures ETP
//! (per-timestep coverage of anomaly intervals) and TTD (steps from an
//! interval's start to its first flagged row).
//!
//! Score orientation is uniform across the toolkit: higher = more
//! anomalous.

use serde::{Deserialize, Serialize};

use crate::data::LabelTimeline;
use crate::error::{Error, Result};

/// ROC AUC via the Mann-Whitney rank statistic; tied scores count 0.5.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("roc_auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average ranks over tie blocks (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = ((i + 1) + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Step-interpolated area under the precision-recall curve:
/// `sum (R_i - R_{i-1}) * P_i` over descending-score thresholds, with tied
/// scores processed as one block.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        return Err(Error::Undefined("average_precision needs positives".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut ap = 0.0;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / n_pos as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Ok(ap)
}

/// Confusion counts at a decision threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// Precision/recall/F1 at threshold `tau`; prediction = `score >= tau`.
/// Zero-denominator conventions: precision 0 with no predicted positives,
/// recall 0 with no actual positives, f1 0 when precision + recall = 0.
pub fn prf_at_threshold(
    scores: &[f64],
    labels: &[bool],
    tau: f64,
) -> Result<(f64, f64, f64, Confusion)> {
    check_lengths(scores, labels)?;
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= tau, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let precision = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
    let recall = if c.tp + c.fn_ == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f1, c))
}

/// Scans every distinct score as a candidate threshold and returns the F1
/// maximizer `(tau*, f1*)`; ties resolve to the smallest threshold.
pub fn optimal_f1_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    check_lengths(scores, labels)?;
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::Undefined("optimal_f1_threshold needs both classes".into()));
    }
    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let mut best = (candidates[0], -1.0);
    for &tau in &candidates {
        let (_, _, f1, _) = prf_at_threshold(scores, labels, tau)?;
        if f1 > best.1 {
            best = (tau, f1);
        }
    }
    Ok(best)
}

/// Early-detection coverage: `detected` anomalous timesteps flagged out of
/// `total` anomalous timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtpResult {
    pub detected: usize,
    pub total: usize,
    /// `100 * detected / total`; NaN when there are no anomalous timesteps.
    pub percent: f64,
}

impl EtpResult {
    /// Renders in the `detected/total (pp.pp%)` style used by the report
    /// tables, e.g. `309/336 (91.96%)`.
    pub fn render(&self) -> String {
        if self.total == 0 {
            format!("{}/{} (nan)", self.detected, self.total)
        } else {
            format!("{}/{} ({:.2}%)", self.detected, self.total, self.percent)
        }
    }
}

fn interval_rows(intervals: &LabelTimeline, timestamps: &[chrono::DateTime<chrono::Utc>]) -> Vec<(usize, usize)> {
    // Row ranges [lo, hi) for each anomalous interval intersected with the
    // timestamp grid.
    intervals
        .anomalous_intervals()
        .iter()
        .filter_map(|iv| {
            let lo = timestamps.partition_point(|&t| t < iv.start);
            let hi = timestamps.partition_point(|&t| t < iv.end);
            (lo < hi).then_some((lo, hi))
        })
        .collect()
}

/// ETP over explicit per-row predictions and the anomaly intervals of a
/// timeline aligned to `timestamps`.
pub fn etp(
    predictions: &[bool],
    intervals: &LabelTimeline,
    timestamps: &[chrono::DateTime<chrono::Utc>],
) -> Result<EtpResult> {
    if predictions.len() != timestamps.len() {
        return Err(Error::RejectedInput(format!(
            "{} predictions for {} timestamps",
            predictions.len(),
            timestamps.len()
        )));
    }
    let mut detected = 0;
    let mut total = 0;
    for (lo, hi) in interval_rows(intervals, timestamps) {
        total += hi - lo;
        detected += predictions[lo..hi].iter().filter(|&&p| p).count();
    }
    let percent = if total == 0 { f64::NAN } else { 100.0 * detected as f64 / total as f64 };
    Ok(EtpResult { detected, total, percent })
}

/// Per-interval time to detection: steps from each anomalous interval's
/// first row to its first flagged row. Undetected intervals are excluded
/// from the mean; returns `(mean_steps, detected_intervals, total_intervals)`
/// with `mean_steps = None` when nothing was detected.
pub fn ttd(
    predictions: &[bool],
    intervals: &LabelTimeline,
    timestamps: &[chrono::DateTime<chrono::Utc>],
) -> Result<(Option<f64>, usize, usize)> {
    if predictions.len() != timestamps.len() {
        return Err(Error::RejectedInput(format!(
            "{} predictions for {} timestamps",
            predictions.len(),
            timestamps.len()
        )));
    }
    let ranges = interval_rows(intervals, timestamps);
    let total = ranges.len();
    let mut delays = Vec::new();
    for (lo, hi) in ranges {
        if let Some(first) = predictions[lo..hi].iter().position(|&p| p) {
            delays.push(first as f64);
        }
    }
    let detected = delays.len();
    let mean = if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<f64>() / delays.len() as f64)
    };
    Ok((mean, detected, total))
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// How the decision threshold was chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Quantile of training scores at (1 - expected anomaly rate).
    TrainQuantile,
    /// F1 maximizer over the evaluated scores.
    OptimalF1,
    /// Supplied by the caller.
    Fixed,
}

/// Full evaluation bundle for one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub auc_roc: Option<f64>,
    pub average_precision: Option<f64>,
    pub threshold: f64,
    pub threshold_rule: ThresholdRule,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub etp_detected: usize,
    pub etp_total: usize,
    /// NaN serializes as null when there are no anomalous timesteps.
    pub etp_percent: Option<f64>,
    /// Per-event detection rate: intervals with at least one flagged row
    /// over total anomalous intervals; None when there are no intervals.
    pub event_detection_rate: Option<f64>,
    /// Mean steps to first detection over detected intervals; None when no
    /// interval was detected.
    pub ttd_mean_steps: Option<f64>,
    /// `ttd_mean_steps` converted to seconds with the frame step.
    pub ttd_mean_seconds: Option<f64>,
}

impl EvalReport {
    /// Builds the report from scores, labels, intervals, and a threshold.
    pub fn assemble(
        scores: &[f64],
        labels: &[bool],
        intervals: &LabelTimeline,
        timestamps: &[chrono::DateTime<chrono::Utc>],
        step_seconds: f64,
        threshold: f64,
        threshold_rule: ThresholdRule,
    ) -> Result<EvalReport> {
        let auc = roc_auc(scores, labels).ok();
        let ap = average_precision(scores, labels).ok();
        let (precision, recall, f1, confusion) = prf_at_threshold(scores, labels, threshold)?;
        let predictions: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
        let etp_res = etp(&predictions, intervals, timestamps)?;
        let (ttd_mean, detected_intervals, total_intervals) =
            ttd(&predictions, intervals, timestamps)?;
        Ok(EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            auc_roc: auc,
            average_precision: ap,
            threshold,
            threshold_rule,
            precision,
            recall,
            f1,
            confusion,
            etp_detected: etp_res.detected,
            etp_total: etp_res.total,
            etp_percent: (etp_res.total > 0).then_some(etp_res.percent),
            event_detection_rate: (total_intervals > 0)
                .then(|| detected_intervals as f64 / total_intervals as f64),
            ttd_mean_steps: ttd_mean,
            ttd_mean_seconds: ttd_mean.map(|m| m * step_seconds),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<EvalReport> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "report schema {} unsupported (expected {REPORT_SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// Flat CSV rendering: one header row and one value row. NaN-like
    /// fields are written as `nan`.
    pub fn to_csv(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x}"));
        let etp_render = EtpResult {
            detected: self.etp_detected,
            total: self.etp_total,
            percent: self.etp_percent.unwrap_or(f64::NAN),
        }
        .render();
        let mut out = String::new();
        out.push_str(
            "auc_roc,average_precision,threshold,threshold_rule,precision,recall,f1,\
             tp,fp,tn,fn,etp,event_detection_rate,ttd_mean_steps,ttd_mean_seconds\n",
        );
        out.push_str(&format!(
            "{},{},{},{:?},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_opt(self.auc_roc),
            fmt_opt(self.average_precision),
            self.threshold,
            self.threshold_rule,
            self.precision,
            self.recall,
            self.f1,
            self.confusion.tp,
            self.confusion.fp,
            self.confusion.tn,
            self.confusion.fn_,
            etp_render,
            fmt_opt(self.event_detection_rate),
            fmt_opt(self.ttd_mean_steps),
            fmt_opt(self.ttd_mean_seconds),
        ));
        out
    }
}

fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::RejectedInput(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(Error::RejectedInput("empty score vector".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::RejectedInput("NaN score".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{IntervalState, LabelInterval, LabelTimeline};
    use chrono::{DateTime, Utc};

    fn ts(step: usize) -> DateTime<Utc> {
        crate::data::parse_instant("2024-01-01T00:00:00Z").unwrap()
            + chrono::Duration::seconds(60 * step as i64)
    }

    fn grid(n: usize) -> Vec<DateTime<Utc>> {
        (0..n).map(ts).collect()
    }

    #[test]
    fn auc_hand_example() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [true, false, true, false];
        assert!((roc_auc(&scores, &labels).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn auc_perfect_and_ties() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [true, true, false, false];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);

        let flat = [0.5, 0.5, 0.5, 0.5];
        assert_eq!(roc_auc(&flat, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_undefined() {
        let scores = [0.1, 0.2];
        assert!(roc_auc(&scores, &[true, true]).is_err());
    }

    #[test]
    fn ap_hand_examples() {
        // Single positive ranked first among 4.
        let scores = [0.9, 0.6, 0.4, 0.2];
        let labels = [true, false, false, false];
        assert!((average_precision(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);

        // Single positive ranked last among 4.
        let labels = [false, false, false, true];
        assert!((average_precision(&scores, &labels).unwrap() - 0.25).abs() < 1e-12);

        // All positive.
        let labels = [true, true, true, true];
        assert!((average_precision(&scores, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prf_hand_examples() {
        let (p, r, f1, _) = prf_at_threshold(&[3.0, 2.0, 1.0], &[true, true, false], 2.0).unwrap();
        assert_eq!((p, r, f1), (1.0, 1.0, 1.0));

        // Threshold above the max score: the zero conventions apply.
        let (p, r, f1, c) = prf_at_threshold(&[3.0, 2.0, 1.0], &[true, true, false], 10.0).unwrap();
        assert_eq!((p, r, f1), (0.0, 0.0, 0.0));
        assert_eq!(c.tp + c.fp, 0);
    }

    #[test]
    fn optimal_f1_enumerates_thresholds() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [true, false, true, false];
        let (tau, f1) = optimal_f1_threshold(&scores, &labels).unwrap();
        assert_eq!(tau, 0.3);
        assert!((f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn optimal_f1_separable_picks_positive_minimum() {
        let scores = [5.0, 4.0, 1.0, 0.5];
        let labels = [true, true, false, false];
        let (tau, f1) = optimal_f1_threshold(&scores, &labels).unwrap();
        assert_eq!(tau, 4.0);
        assert_eq!(f1, 1.0);
    }

    #[test]
    fn optimal_f1_single_class_undefined() {
        assert!(optimal_f1_threshold(&[1.0, 2.0], &[true, true]).is_err());
    }

    fn six_step_interval() -> LabelTimeline {
        // Steps 10..=15 inclusive => [ts(10), ts(16)).
        LabelTimeline::new(vec![LabelInterval {
            start: ts(10),
            end: ts(16),
            state: IntervalState::Anomalous,
        }])
        .unwrap()
    }

    #[test]
    fn etp_counts_coverage() {
        let timestamps = grid(20);
        let mut preds = vec![false; 20];
        for i in [12, 13, 14] {
            preds[i] = true;
        }
        let res = etp(&preds, &six_step_interval(), &timestamps).unwrap();
        assert_eq!((res.detected, res.total), (3, 6));
        assert!((res.percent - 50.0).abs() < 1e-12);
        assert_eq!(res.render(), "3/6 (50.00%)");

        let all = vec![true; 20];
        let res = etp(&all, &six_step_interval(), &timestamps).unwrap();
        assert_eq!((res.detected, res.total), (6, 6));
        assert_eq!(res.render(), "6/6 (100.00%)");
    }

    #[test]
    fn etp_no_intervals_is_nan() {
        let timestamps = grid(20);
        let res = etp(&vec![true; 20], &LabelTimeline::default(), &timestamps).unwrap();
        assert_eq!((res.detected, res.total), (0, 0));
        assert!(res.percent.is_nan());
    }

    #[test]
    fn etp_percent_formatting_two_decimals() {
        let res = EtpResult { detected: 309, total: 336, percent: 100.0 * 309.0 / 336.0 };
        assert_eq!(res.render(), "309/336 (91.96%)");
    }

    #[test]
    fn ttd_counts_delay() {
        let timestamps = grid(20);
        let mut preds = vec![false; 20];
        preds[12] = true;
        let (mean, detected, total) = ttd(&preds, &six_step_interval(), &timestamps).unwrap();
        assert_eq!(mean, Some(2.0));
        assert_eq!((detected, total), (1, 1));

        preds[10] = true;
        let (mean, _, _) = ttd(&preds, &six_step_interval(), &timestamps).unwrap();
        assert_eq!(mean, Some(0.0));

        let none = vec![false; 20];
        let (mean, detected, _) = ttd(&none, &six_step_interval(), &timestamps).unwrap();
        assert_eq!(mean, None);
        assert_eq!(detected, 0);
    }

    #[test]
    fn report_roundtrip_and_null_ttd() {
        let timestamps = grid(20);
        let scores: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let labels: Vec<bool> = (0..20).map(|i| (10..16).contains(&i)).collect();
        let report = EvalReport::assemble(
            &scores,
            &labels,
            &six_step_interval(),
            &timestamps,
            60.0,
            2.0, // above max score: nothing detected
            ThresholdRule::Fixed,
        )
        .unwrap();
        assert_eq!(report.ttd_mean_steps, None);
        let json = report.to_json().unwrap();
        assert!(json.contains("\"ttd_mean_steps\": null"));
        let back = EvalReport::from_json(&json).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn auc_monotone_transform_invariance() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.65];
        let labels = [false, true, false, true, true];
        let base = roc_auc(&scores, &labels).unwrap();
        let affine: Vec<f64> = scores.iter().map(|s| 3.0 * s + 7.0).collect();
        assert_eq!(roc_auc(&affine, &labels).unwrap(), base);
        let expd: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        assert_eq!(roc_auc(&expd, &labels).unwrap(), base);
    }

    #[test]
    fn auc_negation_complements() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.65];
        let labels = [false, true, false, true, true];
        let a = roc_auc(&scores, &labels).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = roc_auc(&neg, &labels).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    proptest::proptest! {
        /// AUC never changes under strictly monotone score transforms.
        #[test]
        fn auc_monotone_invariance_prop(
            raw in proptest::collection::vec((0u8..40, proptest::bool::ANY), 4..200)
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(s, _)| s as f64 / 7.0).collect();
            let labels: Vec<bool> = raw.iter().map(|&(_, l)| l).collect();
            let pos = labels.iter().filter(|&&l| l).count();
            proptest::prop_assume!(pos > 0 && pos < labels.len());
            let base = roc_auc(&scores, &labels).unwrap();
            let affine: Vec<f64> = scores.iter().map(|s| 2.5 * s - 11.0).collect();
            proptest::prop_assert_eq!(roc_auc(&affine, &labels).unwrap(), base);
            let warped: Vec<f64> = scores.iter().map(|s| (s + 1.0).ln()).collect();
            proptest::prop_assert!((roc_auc(&warped, &labels).unwrap() - base).abs() < 1e-12);
            // Tie-free scores complement under negation.
            let mut distinct = scores.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            if distinct.len() == scores.len() {
                let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
                let b = roc_auc(&neg, &labels).unwrap();
                proptest::prop_assert!((base + b - 1.0).abs() < 1e-12);
            }
        }

        /// The returned optimal-F1 threshold dominates every candidate
        /// threshold (exhaustive over distinct scores).
        #[test]
        fn optimal_f1_dominates_all_candidates_prop(
            raw in proptest::collection::vec((0u8..25, proptest::bool::ANY), 4..200)
        ) {
            let scores: Vec<f64> = raw.iter().map(|&(s, _)| s as f64 / 3.0).collect();
            let labels: Vec<bool> = raw.iter().map(|&(_, l)| l).collect();
            let pos = labels.iter().filter(|&&l| l).count();
            proptest::prop_assume!(pos > 0 && pos < labels.len());
            let (tau, best) = optimal_f1_threshold(&scores, &labels).unwrap();
            let (_, _, f1_at_tau, _) = prf_at_threshold(&scores, &labels, tau).unwrap();
            proptest::prop_assert_eq!(best, f1_at_tau);
            for &candidate in &scores {
                let (_, _, f1, _) = prf_at_threshold(&scores, &labels, candidate).unwrap();
                proptest::prop_assert!(f1 <= best + 1e-15);
            }
        }
    }
}
