//! Self-contained detector zoo: supervised tree ensembles (random forest,
//! gradient boosting) and unsupervised scorers (isolation forest,
//! one-class SVM, PCA reconstruction error, k-means distance).
//!
//! Score orientation is uniform: higher = more anomalous. Supervised
//! models emit the positive-class probability; unsupervised models emit
//! their natural anomaly score, negated where needed at the adapter
//! boundary.
//!
//! Trained models serialize to a versioned JSON container
//! ([`ModelArtifact`]) holding the kind tag, feature names, seed, training
//! score quantiles, and the flattened numeric model payload; reload is
//! bit-exact.

mod gbt;
mod iforest;
mod kmeans_det;
mod ocsvm;
mod pca;
mod rf;

pub use gbt::{train_gradient_boosting, GradientBoostingModel, GradientBoostingParams};
pub use iforest::{train_isolation_forest, IsolationForestModel, IsolationForestParams};
pub use kmeans_det::{train_kmeans_detector, KMeansDetectorModel, KMeansDetectorParams};
pub use ocsvm::{train_ocsvm, OcsvmParams, OneClassSvmModel};
pub use pca::{fit_pca, PcaModel, PcaParams};
pub use rf::{train_random_forest, RandomForestModel, RandomForestParams};

use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

/// Versioned, serializable container for any trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    /// Feature names fixed at training; scoring aligns inputs by name and
    /// rejects mismatches.
    pub feature_names: Vec<String>,
    pub seed: u64,
    /// Percentiles 0..=100 of the training scores, for quantile
    /// thresholding.
    pub train_score_quantiles: Vec<f64>,
    /// Non-fatal notes collected during training (clamped parameters,
    /// dropped columns, ...).
    pub warnings: Vec<String>,
    pub payload: ModelPayload,
}

/// The model-specific numeric payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelPayload {
    Rf(RandomForestModel),
    Gbt(GradientBoostingModel),
    Iforest(IsolationForestModel),
    Ocsvm(OneClassSvmModel),
    Pca(PcaModel),
    KmeansDet(KMeansDetectorModel),
    /// Mean-probability combination of a random forest and a gradient
    /// boosting model trained on identical data.
    Ensemble { rf: RandomForestModel, gbt: GradientBoostingModel },
    Pipeline(crate::hybrid::PipelineModel),
}

impl ModelPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelPayload::Rf(_) => "rf",
            ModelPayload::Gbt(_) => "gbt",
            ModelPayload::Iforest(_) => "iforest",
            ModelPayload::Ocsvm(_) => "ocsvm",
            ModelPayload::Pca(_) => "pca",
            ModelPayload::KmeansDet(_) => "kmeans-det",
            ModelPayload::Ensemble { .. } => "ensemble",
            ModelPayload::Pipeline(_) => "pipeline",
        }
    }

    /// True for models whose score is a class probability.
    pub fn is_probabilistic(&self) -> bool {
        matches!(
            self,
            ModelPayload::Rf(_) | ModelPayload::Gbt(_) | ModelPayload::Ensemble { .. }
        )
    }
}

/// Maps the artifact's feature order onto the columns of `x` by name.
pub(crate) fn column_map(x: &FeatureMatrix, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            x.names().iter().position(|n| n == name).ok_or_else(|| {
                Error::RejectedInput(format!("scoring input lacks column {name:?}"))
            })
        })
        .collect()
}

/// Percentiles 0..=100 of a score sample (linear interpolation).
pub(crate) fn percentile_grid(scores: &[f64]) -> Vec<f64> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (0..=100)
        .map(|p| {
            let rank = p as f64 / 100.0 * (sorted.len() - 1) as f64;
            let lo = rank.floor() as usize;
            let hi = rank.ceil() as usize;
            let frac = rank - lo as f64;
            sorted[lo] * (1.0 - frac) + sorted[hi] * frac
        })
        .collect()
}

impl ModelArtifact {
    pub(crate) fn new(
        feature_names: Vec<String>,
        seed: u64,
        train_scores: &[f64],
        warnings: Vec<String>,
        payload: ModelPayload,
    ) -> Self {
        Self {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            feature_names,
            seed,
            train_score_quantiles: percentile_grid(train_scores),
            warnings,
            payload,
        }
    }

    pub fn kind(&self) -> &'static str {
        self.payload.kind()
    }

    /// Scores rows of `x`; higher = more anomalous. Columns are matched to
    /// the training features by name (order-insensitive).
    pub fn score(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        let map = column_map(x, &self.feature_names)?;
        self.payload.score_mapped(x, &map)
    }

    /// Positive-class probability for probabilistic models.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if !self.payload.is_probabilistic() {
            return Err(Error::RejectedInput(format!(
                "model kind {} has no probability output",
                self.kind()
            )));
        }
        self.score(x)
    }

    /// Training-score threshold at quantile `1 - expected_anomaly_rate`.
    pub fn quantile_threshold(&self, expected_anomaly_rate: f64) -> f64 {
        let q = (1.0 - expected_anomaly_rate).clamp(0.0, 1.0) * 100.0;
        let lo = q.floor() as usize;
        let hi = (q.ceil() as usize).min(100);
        let frac = q - lo as f64;
        self.train_score_quantiles[lo] * (1.0 - frac) + self.train_score_quantiles[hi] * frac
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ModelArtifact> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.schema_version != ARTIFACT_SCHEMA_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "artifact schema {} unsupported (expected {ARTIFACT_SCHEMA_VERSION})",
                artifact.schema_version
            )));
        }
        Ok(artifact)
    }
}

impl ModelPayload {
    /// Scores with columns pre-mapped to training order:
    /// `x.col(map[i])` is training feature `i`.
    pub(crate) fn score_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Result<Vec<f64>> {
        match self {
            ModelPayload::Rf(m) => m.predict_proba_mapped(x, map),
            ModelPayload::Gbt(m) => Ok(m.predict_proba_mapped(x, map)),
            ModelPayload::Iforest(m) => Ok(m.score_mapped(x, map)),
            ModelPayload::Ocsvm(m) => Ok(m.score_mapped(x, map)),
            ModelPayload::Pca(m) => Ok(m.score_spe_mapped(x, map)),
            ModelPayload::KmeansDet(m) => Ok(m.score_mapped(x, map)),
            ModelPayload::Ensemble { rf, gbt } => {
                let a = rf.predict_proba_mapped(x, map)?;
                let b = gbt.predict_proba_mapped(x, map);
                Ok(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
            }
            ModelPayload::Pipeline(m) => m.score_mapped(x, map),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_grid_interpolates() {
        let grid = percentile_grid(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[100], 4.0);
        assert_eq!(grid[50], 2.0);
        assert_eq!(grid[25], 1.0);
    }

    #[test]
    fn column_map_rejects_missing() {
        let x = FeatureMatrix::from_columns(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![2.0]],
        )
        .unwrap();
        assert!(column_map(&x, &["a".into(), "c".into()]).is_err());
        assert_eq!(column_map(&x, &["b".into(), "a".into()]).unwrap(), vec![1, 0]);
    }
}
