//! Experiment configuration: a TOML file with one section per subcommand.
//! Command-line flags override file keys; the fully resolved configuration
//! is written next to every command's outputs so a run can be reproduced
//! from its own artifacts.

use serde::{Deserialize, Serialize};

use segdet_core::changepoint::{ChangeFinderParams, ThresholdRule};
use segdet_core::clustering::ClusterAlgo;
use segdet_core::data::MissingPolicy;
use segdet_core::detectors::{
    GradientBoostingParams, IsolationForestParams, KMeansDetectorParams, OcsvmParams,
    PcaParams, RandomForestParams,
};
use segdet_core::error::{Error, Result};
use segdet_core::synthgen::ScenarioConfig;

fn default_jobs() -> usize {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalSection {
    /// Mandatory master seed; there is no wall-clock default.
    pub seed: Option<u64>,
    /// Worker cap; 0 uses every core. Environmental: results never depend
    /// on it, so it is not recorded in the resolved configuration.
    #[serde(skip_serializing)]
    pub jobs: usize,
    /// Output directory. Environmental, like `jobs`.
    #[serde(skip_serializing)]
    pub out: Option<String>,
}

impl Default for GlobalSection {
    fn default() -> Self {
        Self { seed: None, jobs: default_jobs(), out: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub channels: usize,
    pub rows: usize,
    pub step_seconds: f64,
    pub mean_regime_changes: f64,
    pub jump_magnitude_sigma: f64,
    pub ar_low: f64,
    pub ar_high: f64,
    pub noise_sigma: f64,
    pub min_regime_separation: usize,
    pub anomaly_start_fraction: f64,
    pub anomaly_length_fraction: f64,
    pub affected_channel_fraction: f64,
    pub anomaly_drift_sigma: f64,
    pub variance_inflation: f64,
    /// Preset name: "default" or "hard" (1-sigma drift).
    pub preset: String,
}

impl Default for SynthSection {
    fn default() -> Self {
        let cfg = ScenarioConfig::default();
        Self {
            channels: cfg.n_channels,
            rows: cfg.n_rows,
            step_seconds: cfg.step_seconds,
            mean_regime_changes: cfg.mean_regime_changes,
            jump_magnitude_sigma: cfg.jump_magnitude_sigma,
            ar_low: cfg.ar_coefficient_range.0,
            ar_high: cfg.ar_coefficient_range.1,
            noise_sigma: cfg.noise_sigma,
            min_regime_separation: cfg.min_regime_separation,
            anomaly_start_fraction: cfg.anomaly_start_fraction,
            anomaly_length_fraction: cfg.anomaly_length_fraction,
            affected_channel_fraction: cfg.affected_channel_fraction,
            anomaly_drift_sigma: cfg.anomaly_drift_sigma,
            variance_inflation: cfg.variance_inflation,
            preset: "default".into(),
        }
    }
}

impl SynthSection {
    pub fn scenario(&self) -> ScenarioConfig {
        let cfg = ScenarioConfig {
            n_channels: self.channels,
            n_rows: self.rows,
            step_seconds: self.step_seconds,
            mean_regime_changes: self.mean_regime_changes,
            jump_magnitude_sigma: self.jump_magnitude_sigma,
            ar_coefficient_range: (self.ar_low, self.ar_high),
            noise_sigma: self.noise_sigma,
            min_regime_separation: self.min_regime_separation,
            anomaly_start_fraction: self.anomaly_start_fraction,
            anomaly_length_fraction: self.anomaly_length_fraction,
            affected_channel_fraction: self.affected_channel_fraction,
            anomaly_drift_sigma: self.anomaly_drift_sigma,
            variance_inflation: self.variance_inflation,
        };
        if self.preset == "hard" {
            cfg.hard()
        } else {
            cfg
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CpdSection {
    pub order: usize,
    pub discount: f64,
    pub smooth1: usize,
    pub smooth2: usize,
    pub variance_floor: f64,
    pub lambda: f64,
    pub min_sep: usize,
}

impl Default for CpdSection {
    fn default() -> Self {
        let p = ChangeFinderParams::default();
        let r = ThresholdRule::default();
        Self {
            order: p.order,
            discount: p.discount,
            smooth1: p.smooth1,
            smooth2: p.smooth2,
            variance_floor: p.variance_floor,
            lambda: r.lambda,
            min_sep: r.min_sep,
        }
    }
}

impl CpdSection {
    pub fn params(&self) -> ChangeFinderParams {
        ChangeFinderParams {
            order: self.order,
            discount: self.discount,
            smooth1: self.smooth1,
            smooth2: self.smooth2,
            variance_floor: self.variance_floor,
        }
    }

    pub fn rule(&self) -> ThresholdRule {
        ThresholdRule { lambda: self.lambda, min_sep: self.min_sep }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturizeSection {
    /// Add the five per-channel change-point features.
    pub cp_features: bool,
    /// Trailing window (rows) for cp_freq; 0 derives one day from the step.
    pub freq_window: usize,
    /// Keep only feature columns matching these patterns (empty = all).
    pub select: Vec<String>,
    pub missing_policy: MissingPolicy,
}

impl Default for FeaturizeSection {
    fn default() -> Self {
        Self {
            cp_features: true,
            freq_window: 0,
            select: Vec::new(),
            missing_policy: MissingPolicy::ForwardFill,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterSection {
    /// "kmeans" | "gmm" | "optics" | "hdbscan" | "all".
    pub algo: String,
    pub min_segment_size: usize,
    pub kmeans_k: usize,
    pub kmeans_max_iter: usize,
    pub gmm_k: usize,
    pub gmm_max_iter: usize,
    pub gmm_reg: f64,
    pub optics_min_pts: usize,
    /// Negative means unbounded.
    pub optics_eps_max: f64,
    pub optics_reach_threshold: f64,
    pub hdbscan_min_cluster_size: usize,
    /// 0 defaults to min_cluster_size.
    pub hdbscan_min_samples: usize,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            algo: "all".into(),
            min_segment_size: 50,
            kmeans_k: 3,
            kmeans_max_iter: 100,
            gmm_k: 3,
            gmm_max_iter: 100,
            gmm_reg: 1e-6,
            optics_min_pts: 5,
            optics_eps_max: -1.0,
            optics_reach_threshold: 0.5,
            hdbscan_min_cluster_size: 15,
            hdbscan_min_samples: 0,
        }
    }
}

impl ClusterSection {
    pub fn algo_params(&self, name: &str) -> Result<ClusterAlgo> {
        match name {
            "kmeans" => Ok(ClusterAlgo::KMeans { k: self.kmeans_k, max_iter: self.kmeans_max_iter }),
            "gmm" => Ok(ClusterAlgo::Gmm {
                k: self.gmm_k,
                max_iter: self.gmm_max_iter,
                reg: self.gmm_reg,
            }),
            "optics" => Ok(ClusterAlgo::Optics {
                min_pts: self.optics_min_pts,
                eps_max: if self.optics_eps_max < 0.0 {
                    f64::INFINITY
                } else {
                    self.optics_eps_max
                },
                reach_threshold: self.optics_reach_threshold,
            }),
            "hdbscan" => Ok(ClusterAlgo::Hdbscan {
                min_cluster_size: self.hdbscan_min_cluster_size,
                min_samples: if self.hdbscan_min_samples == 0 {
                    self.hdbscan_min_cluster_size
                } else {
                    self.hdbscan_min_samples
                },
            }),
            other => Err(Error::RejectedInput(format!("unknown clustering algorithm {other:?}"))),
        }
    }

    pub fn algo_names(&self) -> Vec<&'static str> {
        if self.algo == "all" {
            vec!["kmeans", "gmm", "optics", "hdbscan"]
        } else {
            match self.algo.as_str() {
                "kmeans" => vec!["kmeans"],
                "gmm" => vec!["gmm"],
                "optics" => vec!["optics"],
                "hdbscan" => vec!["hdbscan"],
                _ => vec![],
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    /// Preset: rf | gbt | iforest | ocsvm | pca | kmeans-det | ensemble |
    /// pca-ocsvm | pca-gbt | ocsvm-rf | ocsvm-gbt, or a path to a pipeline
    /// spec JSON file.
    pub pipeline: String,
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub rf_min_leaf: usize,
    pub rf_balanced: bool,
    pub gbt_rounds: usize,
    pub gbt_learning_rate: f64,
    pub gbt_max_depth: usize,
    pub gbt_min_leaf: usize,
    pub gbt_subsample: f64,
    pub iforest_trees: usize,
    pub iforest_subsample: usize,
    pub ocsvm_nu: f64,
    /// Negative means 1 / n_features.
    pub ocsvm_gamma: f64,
    pub ocsvm_train_cap: usize,
    pub pca_variance_keep: f64,
    pub kmeans_k: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            pipeline: "ensemble".into(),
            rf_trees: 100,
            rf_max_depth: 12,
            rf_min_leaf: 1,
            rf_balanced: true,
            gbt_rounds: 100,
            gbt_learning_rate: 0.1,
            gbt_max_depth: 6,
            gbt_min_leaf: 1,
            gbt_subsample: 1.0,
            iforest_trees: 100,
            iforest_subsample: 256,
            ocsvm_nu: 0.1,
            ocsvm_gamma: -1.0,
            ocsvm_train_cap: 5000,
            pca_variance_keep: 0.95,
            kmeans_k: 8,
        }
    }
}

impl TrainSection {
    pub fn rf_params(&self, seed: u64) -> RandomForestParams {
        RandomForestParams {
            n_trees: self.rf_trees,
            max_depth: self.rf_max_depth,
            max_features: None,
            min_leaf: self.rf_min_leaf,
            balanced_class_weights: self.rf_balanced,
            seed,
        }
    }

    pub fn gbt_params(&self, seed: u64) -> GradientBoostingParams {
        GradientBoostingParams {
            n_rounds: self.gbt_rounds,
            learning_rate: self.gbt_learning_rate,
            max_depth: self.gbt_max_depth,
            min_leaf: self.gbt_min_leaf,
            subsample: self.gbt_subsample,
            seed,
        }
    }

    pub fn iforest_params(&self, seed: u64) -> IsolationForestParams {
        IsolationForestParams {
            n_trees: self.iforest_trees,
            subsample_size: self.iforest_subsample,
            seed,
        }
    }

    pub fn ocsvm_params(&self, seed: u64) -> OcsvmParams {
        OcsvmParams {
            nu: self.ocsvm_nu,
            gamma: (self.ocsvm_gamma > 0.0).then_some(self.ocsvm_gamma),
            train_cap: self.ocsvm_train_cap,
            seed,
            ..Default::default()
        }
    }

    pub fn pca_params(&self) -> PcaParams {
        PcaParams { variance_keep: self.pca_variance_keep }
    }

    pub fn kmeans_params(&self, seed: u64) -> KMeansDetectorParams {
        KMeansDetectorParams { k: self.kmeans_k, max_iter: 200, seed }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateSection {
    /// "optimal-f1" or "quantile".
    pub threshold_rule: String,
    pub expected_rate: f64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { threshold_rule: "optimal-f1".into(), expected_rate: 0.01 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareSection {
    pub split_fraction: f64,
    /// Path to a JSON list of comparison specs; empty uses the built-in
    /// five-row set.
    pub specs_file: String,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { split_fraction: 0.5, specs_file: String::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportanceSection {
    pub repetitions: usize,
    /// Channel whose segment map scopes the permutation; empty = first.
    pub channel: String,
    pub accuracy_fallback: bool,
    pub expected_rate: f64,
    pub top_k: usize,
}

impl Default for ImportanceSection {
    fn default() -> Self {
        Self {
            repetitions: 5,
            channel: String::new(),
            accuracy_fallback: false,
            expected_rate: 0.01,
            top_k: 10,
        }
    }
}

/// The full configuration file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub global: GlobalSection,
    pub synth: SynthSection,
    pub cpd: CpdSection,
    pub featurize: FeaturizeSection,
    pub cluster: ClusterSection,
    pub train: TrainSection,
    pub evaluate: EvaluateSection,
    pub compare: CompareSection,
    pub importance: ImportanceSection,
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::RejectedInput(format!("config {path:?}: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Serialization(e.to_string()))
    }

    /// The mandatory master seed.
    pub fn seed(&self) -> Result<u64> {
        self.global.seed.ok_or_else(|| {
            Error::RejectedInput(
                "no seed given: set --seed or [global].seed (wall-clock defaults are not allowed)"
                    .into(),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_roundtrips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.cpd.order, cfg.cpd.order);
        assert_eq!(back.synth.rows, cfg.synth.rows);
    }

    #[test]
    fn missing_seed_is_an_error() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.seed().is_err());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: ExperimentConfig =
            toml::from_str("[global]\nseed = 7\n\n[cpd]\nlambda = 2.5\n").unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.cpd.lambda, 2.5);
        assert_eq!(cfg.cpd.order, 2);
    }
}
