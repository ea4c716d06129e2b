//! Internal cluster validation metrics. All three exclude noise points
//! (label -1) and are undefined with fewer than two clusters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::dist;

/// Floor applied to degenerate denominators.
pub const METRIC_EPSILON: f64 = 1e-12;

/// A metric value plus a flag marking that a degenerate denominator was
/// floored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOutcome {
    pub value: f64,
    pub capped: bool,
}

fn group_members(labels: &[i64]) -> BTreeMap<i64, Vec<usize>> {
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            groups.entry(l).or_default().push(i);
        }
    }
    groups
}

/// Mean silhouette coefficient over non-noise points: `(b - a) / max(a, b)`
/// with `a` the mean intra-cluster distance (self excluded) and `b` the
/// smallest mean distance to another cluster. Points in singleton clusters
/// score 0.
pub fn silhouette(x: &[Vec<f64>], labels: &[i64]) -> Result<f64> {
    check_input(x, labels)?;
    let groups = group_members(labels);
    if groups.len() < 2 {
        return Err(Error::Undefined(format!(
            "silhouette needs >= 2 clusters, found {}",
            groups.len()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (&own, members) in &groups {
        for &i in members {
            if members.len() == 1 {
                count += 1; // singleton scores 0
                continue;
            }
            let a = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| dist(&x[i], &x[j]))
                .sum::<f64>()
                / (members.len() - 1) as f64;
            let b = groups
                .iter()
                .filter(|(&g, _)| g != own)
                .map(|(_, other)| {
                    other.iter().map(|&j| dist(&x[i], &x[j])).sum::<f64>() / other.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            total += if denom > 0.0 { (b - a) / denom } else { 0.0 };
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn centroid(x: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let d = x[0].len();
    let mut c = vec![0.0; d];
    for &i in members {
        for (j, v) in x[i].iter().enumerate() {
            c[j] += v;
        }
    }
    for v in &mut c {
        *v /= members.len() as f64;
    }
    c
}

/// Calinski-Harabasz index: `[SSB / (k - 1)] / [SSW / (n - k)]` with
/// centroid-based sums of squares; SSW is floored at [`METRIC_EPSILON`].
pub fn calinski_harabasz(x: &[Vec<f64>], labels: &[i64]) -> Result<MetricOutcome> {
    check_input(x, labels)?;
    let groups = group_members(labels);
    let k = groups.len();
    if k < 2 {
        return Err(Error::Undefined(format!("CH needs >= 2 clusters, found {k}")));
    }
    let kept: Vec<usize> = groups.values().flatten().copied().collect();
    let n = kept.len();
    if n <= k {
        return Err(Error::Undefined(format!("CH needs n > k ({n} <= {k})")));
    }
    let grand = centroid(x, &kept);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for members in groups.values() {
        let c = centroid(x, members);
        ssb += members.len() as f64 * c.iter().zip(&grand).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for &i in members {
            ssw += x[i].iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    let capped = ssw < METRIC_EPSILON;
    let ssw = ssw.max(METRIC_EPSILON);
    let value = (ssb / (k - 1) as f64) / (ssw / (n - k) as f64);
    Ok(MetricOutcome { value, capped })
}

/// Davies-Bouldin index: mean over clusters of the worst
/// `(s_i + s_j) / d(c_i, c_j)` ratio, where `s` is the mean distance of
/// members to their centroid. Coincident centroids floor the denominator
/// at [`METRIC_EPSILON`] and set the capped flag.
pub fn davies_bouldin(x: &[Vec<f64>], labels: &[i64]) -> Result<MetricOutcome> {
    check_input(x, labels)?;
    let groups = group_members(labels);
    let k = groups.len();
    if k < 2 {
        return Err(Error::Undefined(format!("DB needs >= 2 clusters, found {k}")));
    }
    let centroids: Vec<Vec<f64>> = groups.values().map(|m| centroid(x, m)).collect();
    let scatters: Vec<f64> = groups
        .values()
        .zip(&centroids)
        .map(|(members, c)| {
            members.iter().map(|&i| dist(&x[i], c)).sum::<f64>() / members.len() as f64
        })
        .collect();
    let mut capped = false;
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let mut sep = dist(&centroids[i], &centroids[j]);
            if sep < METRIC_EPSILON {
                sep = METRIC_EPSILON;
                capped = true;
            }
            worst = worst.max((scatters[i] + scatters[j]) / sep);
        }
        total += worst;
    }
    Ok(MetricOutcome { value: total / k as f64, capped })
}

fn check_input(x: &[Vec<f64>], labels: &[i64]) -> Result<()> {
    if x.len() != labels.len() {
        return Err(Error::RejectedInput(format!(
            "{} rows for {} labels",
            x.len(),
            labels.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::RejectedInput("empty input".into()));
    }
    Ok(())
}
