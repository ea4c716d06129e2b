//! Staged detector pipelines and the RF+GBT ensemble baseline.
//!
//! A pipeline is up to three stages: an optional PCA reducer, an optional
//! one-class stage (one-class SVM or isolation forest), and an optional
//! final supervised stage (random forest, gradient boosting, or their
//! ensemble). In `replace` mode each stage feeds only its output
//! downstream; in `augment` mode it appends its output to the incoming
//! features. The comparison harness trains a list of pipelines on an
//! identical temporal split and reports AUC, F1, and the F1 drop relative
//! to the first (reference) row.

use serde::{Deserialize, Serialize};

use crate::cpfeatures::select_features;
use crate::data::{FeatureMatrix, LabeledDataset};
use crate::detectors::{
    fit_pca, train_gradient_boosting, train_isolation_forest, train_ocsvm,
    train_random_forest, GradientBoostingModel, GradientBoostingParams,
    IsolationForestModel, IsolationForestParams, ModelArtifact, ModelPayload, OcsvmParams,
    OneClassSvmModel, PcaModel, PcaParams, RandomForestModel, RandomForestParams,
};
use crate::error::{Error, Result};
use crate::evaluation::{optimal_f1_threshold, roc_auc};

/// How a stage's output enters the next stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Downstream sees only the stage output.
    Replace,
    /// Downstream sees the incoming features plus the stage output.
    Augment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum OneClassStageSpec {
    Ocsvm(OcsvmParams),
    Iforest(IsolationForestParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum FinalStageSpec {
    Rf(RandomForestParams),
    Gbt(GradientBoostingParams),
    Ensemble(EnsembleParams),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub rf: RandomForestParams,
    pub gbt: GradientBoostingParams,
}


/// Declarative pipeline description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub name: String,
    #[serde(default)]
    pub reducer: Option<PcaParams>,
    #[serde(default)]
    pub one_class: Option<OneClassStageSpec>,
    #[serde(default)]
    pub final_stage: Option<FinalStageSpec>,
    pub mode: FeatureMode,
}

impl PipelineSpec {
    /// Plain supervised baseline wrapping a single final stage.
    pub fn supervised(name: impl Into<String>, final_stage: FinalStageSpec) -> Self {
        Self {
            name: name.into(),
            reducer: None,
            one_class: None,
            final_stage: Some(final_stage),
            mode: FeatureMode::Augment,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.one_class.is_none() && self.final_stage.is_none() {
            return Err(Error::RejectedInput(format!(
                "pipeline {:?} has no scoring stage",
                self.name
            )));
        }
        Ok(())
    }

    /// True when training requires labels.
    pub fn is_supervised(&self) -> bool {
        self.final_stage.is_some()
    }
}

/// Validated, executable pipeline.
#[derive(Debug, Clone)]
pub struct Pipeline {
    spec: PipelineSpec,
}

/// Builds an executable pipeline after validating the spec.
pub fn build_pipeline(spec: PipelineSpec) -> Result<Pipeline> {
    spec.validate()?;
    Ok(Pipeline { spec })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OneClassModel {
    Ocsvm(OneClassSvmModel),
    Iforest(IsolationForestModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalModel {
    Rf(RandomForestModel),
    Gbt(GradientBoostingModel),
    Ensemble { rf: RandomForestModel, gbt: GradientBoostingModel },
}

/// Trained pipeline payload: the fitted stage models plus the spec that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub spec: PipelineSpec,
    pub reducer: Option<PcaModel>,
    pub one_class: Option<OneClassModel>,
    pub final_stage: Option<FinalModel>,
}

fn matrix_from(names: Vec<String>, columns: Vec<Vec<f64>>) -> FeatureMatrix {
    FeatureMatrix::from_columns(names, columns).expect("stage columns are row-aligned")
}

impl PipelineModel {
    /// Applies the reducer stage to `current`, honoring the feature mode.
    fn apply_reducer(&self, current: FeatureMatrix) -> FeatureMatrix {
        let Some(pca) = &self.reducer else { return current };
        let identity: Vec<usize> = (0..current.n_cols()).collect();
        let projected = pca.transform_mapped(&current, &identity);
        let k = pca.n_components();
        let mut names: Vec<String> = (0..k).map(|i| format!("pc{i}")).collect();
        let mut columns: Vec<Vec<f64>> = (0..k)
            .map(|i| projected.iter().map(|row| row[i]).collect())
            .collect();
        if self.spec.mode == FeatureMode::Augment {
            let mut all_names = current.names().to_vec();
            let mut all_cols: Vec<Vec<f64>> =
                (0..current.n_cols()).map(|c| current.col(c).to_vec()).collect();
            all_names.append(&mut names);
            all_cols.append(&mut columns);
            matrix_from(all_names, all_cols)
        } else {
            matrix_from(names, columns)
        }
    }

    /// Applies the one-class stage; returns the matrix for the next stage
    /// and the stage's score column.
    fn apply_one_class(&self, current: FeatureMatrix) -> (FeatureMatrix, Option<Vec<f64>>) {
        let Some(stage) = &self.one_class else { return (current, None) };
        let identity: Vec<usize> = (0..current.n_cols()).collect();
        let (name, scores) = match stage {
            OneClassModel::Ocsvm(m) => ("ocsvm_score", m.score_mapped(&current, &identity)),
            OneClassModel::Iforest(m) => ("iforest_score", m.score_mapped(&current, &identity)),
        };
        let next = if self.spec.mode == FeatureMode::Augment {
            let mut names = current.names().to_vec();
            let mut cols: Vec<Vec<f64>> =
                (0..current.n_cols()).map(|c| current.col(c).to_vec()).collect();
            names.push(name.to_string());
            cols.push(scores.clone());
            matrix_from(names, cols)
        } else {
            matrix_from(vec![name.to_string()], vec![scores.clone()])
        };
        (next, Some(scores))
    }

    /// Scores with the trained stage chain; the column map aligns `x` to
    /// the pipeline's original training features.
    pub fn score_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Result<Vec<f64>> {
        let names: Vec<String> = (0..map.len()).map(|i| format!("in{i}")).collect();
        let columns: Vec<Vec<f64>> = map.iter().map(|&c| x.col(c).to_vec()).collect();
        let current = matrix_from(names, columns);
        let current = self.apply_reducer(current);
        let (current, one_class_scores) = self.apply_one_class(current);
        let identity: Vec<usize> = (0..current.n_cols()).collect();
        match &self.final_stage {
            Some(FinalModel::Rf(m)) => m.predict_proba_mapped(&current, &identity),
            Some(FinalModel::Gbt(m)) => Ok(m.predict_proba_mapped(&current, &identity)),
            Some(FinalModel::Ensemble { rf, gbt }) => {
                let a = rf.predict_proba_mapped(&current, &identity)?;
                let b = gbt.predict_proba_mapped(&current, &identity);
                Ok(a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect())
            }
            None => one_class_scores.ok_or_else(|| {
                Error::RejectedInput("pipeline has no scoring stage".into())
            }),
        }
    }
}

impl Pipeline {
    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    /// Trains every stage in order. `y` is required when a final
    /// supervised stage is present.
    pub fn train(&self, x: &FeatureMatrix, y: Option<&[bool]>) -> Result<ModelArtifact> {
        let mut model = PipelineModel {
            spec: self.spec.clone(),
            reducer: None,
            one_class: None,
            final_stage: None,
        };

        let mut current = x.clone();
        if let Some(pca_params) = &self.spec.reducer {
            let artifact = fit_pca(&current, pca_params)?;
            let ModelPayload::Pca(pca) = artifact.payload else { unreachable!() };
            model.reducer = Some(pca);
            current = model.apply_reducer(current);
        }
        if let Some(stage) = &self.spec.one_class {
            let trained = match stage {
                OneClassStageSpec::Ocsvm(p) => {
                    let artifact = train_ocsvm(&current, p)?;
                    let ModelPayload::Ocsvm(m) = artifact.payload else { unreachable!() };
                    OneClassModel::Ocsvm(m)
                }
                OneClassStageSpec::Iforest(p) => {
                    let artifact = train_isolation_forest(&current, p)?;
                    let ModelPayload::Iforest(m) = artifact.payload else { unreachable!() };
                    OneClassModel::Iforest(m)
                }
            };
            model.one_class = Some(trained);
            let (next, _) = model.apply_one_class(current);
            current = next;
        }
        if let Some(final_spec) = &self.spec.final_stage {
            let y = y.ok_or_else(|| {
                Error::RejectedInput("supervised final stage needs labels".into())
            })?;
            let trained = match final_spec {
                FinalStageSpec::Rf(p) => {
                    let artifact = train_random_forest(&current, y, p)?;
                    let ModelPayload::Rf(m) = artifact.payload else { unreachable!() };
                    FinalModel::Rf(m)
                }
                FinalStageSpec::Gbt(p) => {
                    let artifact = train_gradient_boosting(&current, y, p)?;
                    let ModelPayload::Gbt(m) = artifact.payload else { unreachable!() };
                    FinalModel::Gbt(m)
                }
                FinalStageSpec::Ensemble(p) => {
                    let rf_artifact = train_random_forest(&current, y, &p.rf)?;
                    let gbt_artifact = train_gradient_boosting(&current, y, &p.gbt)?;
                    let ModelPayload::Rf(rf) = rf_artifact.payload else { unreachable!() };
                    let ModelPayload::Gbt(gbt) = gbt_artifact.payload else { unreachable!() };
                    FinalModel::Ensemble { rf, gbt }
                }
            };
            model.final_stage = Some(trained);
        }

        let seed = pipeline_seed(&self.spec);
        let identity: Vec<usize> = (0..x.n_cols()).collect();
        let train_scores = model.score_mapped(x, &identity)?;
        Ok(ModelArtifact::new(
            x.names().to_vec(),
            seed,
            &train_scores,
            Vec::new(),
            ModelPayload::Pipeline(model),
        ))
    }
}

fn pipeline_seed(spec: &PipelineSpec) -> u64 {
    match (&spec.final_stage, &spec.one_class) {
        (Some(FinalStageSpec::Rf(p)), _) => p.seed,
        (Some(FinalStageSpec::Gbt(p)), _) => p.seed,
        (Some(FinalStageSpec::Ensemble(p)), _) => p.rf.seed,
        (None, Some(OneClassStageSpec::Ocsvm(p))) => p.seed,
        (None, Some(OneClassStageSpec::Iforest(p))) => p.seed,
        (None, None) => 0,
    }
}

/// Trains the RF+GBT ensemble on identical data; the ensemble probability
/// is the unweighted mean of the member probabilities.
pub fn train_ensemble_rf_gbt(
    x: &FeatureMatrix,
    y: &[bool],
    params: &EnsembleParams,
) -> Result<ModelArtifact> {
    let rf_artifact = train_random_forest(x, y, &params.rf)?;
    let gbt_artifact = train_gradient_boosting(x, y, &params.gbt)?;
    let ModelPayload::Rf(rf) = rf_artifact.payload else { unreachable!() };
    let ModelPayload::Gbt(gbt) = gbt_artifact.payload else { unreachable!() };
    let payload = ModelPayload::Ensemble { rf, gbt };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = payload.score_mapped(x, &identity)?;
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        params.rf.seed,
        &train_scores,
        Vec::new(),
        payload,
    ))
}

/// One comparison row: a named feature selection plus a pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub name: String,
    /// Feature-name patterns to keep before training; `None` keeps all.
    #[serde(default)]
    pub feature_patterns: Option<Vec<String>>,
    pub pipeline: PipelineSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConfig {
    /// Fraction of rows (chronological prefix) used for training.
    pub split_fraction: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self { split_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub approach: String,
    pub auc_roc: f64,
    pub f1: f64,
    /// Percent F1 drop vs. the first row, rounded to the nearest integer;
    /// `None` for the reference row itself.
    pub f1_drop_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// Percent F1 drop of `f1` against `reference`, rounded to an integer.
pub fn f1_drop_percent(reference: f64, f1: f64) -> f64 {
    (100.0 * (1.0 - f1 / reference)).round()
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("approach,auc_roc,f1,f1_drop_pct\n");
        for row in &self.rows {
            let drop = row
                .f1_drop_pct
                .map_or("reference".to_string(), |d| format!("{d}"));
            out.push_str(&format!("{},{},{},{drop}\n", row.approach, row.auc_roc, row.f1));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Trains and evaluates every spec on an identical chronological split of
/// the dataset, reporting test AUC and F1 at the F1-optimal threshold.
pub fn run_comparison(
    dataset: &LabeledDataset,
    specs: &[ComparisonSpec],
    config: &ComparisonConfig,
) -> Result<ComparisonTable> {
    if specs.is_empty() {
        return Err(Error::RejectedInput("comparison needs at least one spec".into()));
    }
    let n = dataset.n_rows();
    let split = ((n as f64) * config.split_fraction).round() as usize;
    if split == 0 || split >= n {
        return Err(Error::RejectedInput(format!(
            "split fraction {} leaves an empty side ({split}/{n})",
            config.split_fraction
        )));
    }
    let mut rows = Vec::with_capacity(specs.len());
    let mut reference_f1 = None;
    for spec in specs {
        let filtered = match &spec.feature_patterns {
            Some(patterns) => select_features(dataset, patterns)?,
            None => dataset.clone(),
        };
        let x = filtered.feature_matrix();
        let x_train = x.slice_rows(0, split);
        let x_test = x.slice_rows(split, n);
        let y_train = &filtered.labels[..split];
        let y_test = &filtered.labels[split..];

        let pipeline = build_pipeline(spec.pipeline.clone())?;
        let artifact = pipeline.train(
            &x_train,
            spec.pipeline.is_supervised().then_some(y_train),
        )?;
        let scores = artifact.score(&x_test)?;
        let auc = roc_auc(&scores, y_test)?;
        let (_, f1) = optimal_f1_threshold(&scores, y_test)?;
        let drop = reference_f1.map(|reference| f1_drop_percent(reference, f1));
        if reference_f1.is_none() {
            reference_f1 = Some(f1);
        }
        rows.push(ComparisonRow { approach: spec.name.clone(), auc_roc: auc, f1, f1_drop_pct: drop });
    }
    Ok(ComparisonTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn labeled_blobs(n: usize, seed: u64) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut c0 = Vec::new();
        let mut c1 = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = i % 5 == 0;
            let offset = if label { 6.0 } else { 0.0 };
            c0.push(offset + normal.sample(&mut rng));
            c1.push(normal.sample(&mut rng) - offset);
            y.push(label);
        }
        let x = FeatureMatrix::from_columns(
            vec!["f0".into(), "f1".into()],
            vec![c0, c1],
        )
        .unwrap();
        (x, y)
    }

    fn quick_rf(seed: u64) -> RandomForestParams {
        RandomForestParams { n_trees: 15, max_depth: 6, seed, ..Default::default() }
    }

    fn quick_gbt(seed: u64) -> GradientBoostingParams {
        GradientBoostingParams { n_rounds: 20, max_depth: 3, seed, ..Default::default() }
    }

    #[test]
    fn rf_only_pipeline_equals_plain_rf() {
        let (x, y) = labeled_blobs(200, 1);
        let spec = PipelineSpec::supervised("rf", FinalStageSpec::Rf(quick_rf(3)));
        let pipeline = build_pipeline(spec).unwrap();
        let composed = pipeline.train(&x, Some(&y)).unwrap();
        let plain = train_random_forest(&x, &y, &quick_rf(3)).unwrap();
        let a = composed.score(&x).unwrap();
        let b = plain.score(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pca_then_ocsvm_scores_in_reduced_space() {
        let (x, _) = labeled_blobs(150, 2);
        let spec = PipelineSpec {
            name: "pca+ocsvm".into(),
            reducer: Some(PcaParams { variance_keep: 0.95 }),
            one_class: Some(OneClassStageSpec::Ocsvm(OcsvmParams {
                nu: 0.1,
                seed: 4,
                ..Default::default()
            })),
            final_stage: None,
            mode: FeatureMode::Replace,
        };
        let pipeline = build_pipeline(spec).unwrap();
        let artifact = pipeline.train(&x, None).unwrap();

        // Manual composition.
        let pca_artifact = fit_pca(&x, &PcaParams { variance_keep: 0.95 }).unwrap();
        let ModelPayload::Pca(pca) = pca_artifact.payload else { unreachable!() };
        let identity: Vec<usize> = (0..x.n_cols()).collect();
        let projected = pca.transform_mapped(&x, &identity);
        let k = pca.n_components();
        let reduced = FeatureMatrix::from_columns(
            (0..k).map(|i| format!("pc{i}")).collect(),
            (0..k).map(|i| projected.iter().map(|r| r[i]).collect()).collect(),
        )
        .unwrap();
        let manual = train_ocsvm(
            &reduced,
            &OcsvmParams { nu: 0.1, seed: 4, ..Default::default() },
        )
        .unwrap();
        assert_eq!(artifact.score(&x).unwrap(), manual.score(&reduced).unwrap());
    }

    #[test]
    fn ocsvm_augment_rf_trains_on_superset() {
        let (x, y) = labeled_blobs(200, 3);
        let spec = PipelineSpec {
            name: "ocsvm+rf".into(),
            reducer: None,
            one_class: Some(OneClassStageSpec::Ocsvm(OcsvmParams {
                nu: 0.1,
                seed: 5,
                ..Default::default()
            })),
            final_stage: Some(FinalStageSpec::Rf(quick_rf(5))),
            mode: FeatureMode::Augment,
        };
        let pipeline = build_pipeline(spec).unwrap();
        let artifact = pipeline.train(&x, Some(&y)).unwrap();
        let ModelPayload::Pipeline(model) = &artifact.payload else { unreachable!() };
        let FinalModel::Rf(rf) = model.final_stage.as_ref().unwrap() else { unreachable!() };
        // Final stage sees the original features plus one score column.
        assert_eq!(rf.n_features, x.n_cols() + 1);
        let scores = artifact.score(&x).unwrap();
        assert_eq!(scores.len(), x.n_rows());
    }

    #[test]
    fn pipeline_without_stages_rejected() {
        let spec = PipelineSpec {
            name: "empty".into(),
            reducer: Some(PcaParams::default()),
            one_class: None,
            final_stage: None,
            mode: FeatureMode::Replace,
        };
        assert!(build_pipeline(spec).is_err());
    }

    #[test]
    fn ensemble_probability_is_member_mean() {
        let (x, y) = labeled_blobs(200, 4);
        let params = EnsembleParams { rf: quick_rf(6), gbt: quick_gbt(7) };
        let ensemble = train_ensemble_rf_gbt(&x, &y, &params).unwrap();
        let rf = train_random_forest(&x, &y, &params.rf).unwrap();
        let gbt = train_gradient_boosting(&x, &y, &params.gbt).unwrap();
        let pe = ensemble.score(&x).unwrap();
        let pr = rf.score(&x).unwrap();
        let pg = gbt.score(&x).unwrap();
        for i in 0..x.n_rows() {
            assert_eq!(pe[i], 0.5 * (pr[i] + pg[i]));
            assert!(pe[i] >= pr[i].min(pg[i]) && pe[i] <= pr[i].max(pg[i]));
        }
    }

    #[test]
    fn ensemble_reaches_perfect_training_auc_on_separable_data() {
        let (x, y) = labeled_blobs(300, 5);
        let params = EnsembleParams { rf: quick_rf(8), gbt: quick_gbt(9) };
        let artifact = train_ensemble_rf_gbt(&x, &y, &params).unwrap();
        let scores = artifact.score(&x).unwrap();
        assert_eq!(crate::evaluation::roc_auc(&scores, &y).unwrap(), 1.0);
    }

    #[test]
    fn pipeline_deterministic_across_runs() {
        let (x, y) = labeled_blobs(150, 6);
        let spec = PipelineSpec {
            name: "pca+gbt".into(),
            reducer: Some(PcaParams { variance_keep: 1.0 }),
            one_class: None,
            final_stage: Some(FinalStageSpec::Gbt(quick_gbt(10))),
            mode: FeatureMode::Replace,
        };
        let a = build_pipeline(spec.clone()).unwrap().train(&x, Some(&y)).unwrap();
        let b = build_pipeline(spec).unwrap().train(&x, Some(&y)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    fn comparison_dataset(seed: u64) -> LabeledDataset {
        let (x, y) = labeled_blobs(400, seed);
        let timestamps: Vec<_> = (0..400)
            .map(|i| {
                crate::data::parse_instant("2024-01-01T00:00:00Z").unwrap()
                    + chrono::Duration::seconds(60 * i as i64)
            })
            .collect();
        LabeledDataset {
            timestamps,
            step_seconds: 60.0,
            columns: vec![
                crate::data::FeatureColumn {
                    name: "f0".into(),
                    origin: crate::data::FeatureOrigin::Raw,
                    values: x.col(0).to_vec(),
                },
                crate::data::FeatureColumn {
                    name: "f1".into(),
                    origin: crate::data::FeatureOrigin::Raw,
                    values: x.col(1).to_vec(),
                },
            ],
            labels: y,
        }
    }

    #[test]
    fn identical_specs_give_identical_rows() {
        let dataset = comparison_dataset(7);
        let spec = ComparisonSpec {
            name: "baseline".into(),
            feature_patterns: None,
            pipeline: PipelineSpec::supervised("rf", FinalStageSpec::Rf(quick_rf(1))),
        };
        let mut second = spec.clone();
        second.name = "again".into();
        let table =
            run_comparison(&dataset, &[spec, second], &ComparisonConfig::default()).unwrap();
        assert_eq!(table.rows[0].auc_roc, table.rows[1].auc_roc);
        assert_eq!(table.rows[0].f1, table.rows[1].f1);
        assert_eq!(table.rows[0].f1_drop_pct, None);
        assert_eq!(table.rows[1].f1_drop_pct, Some(0.0));
    }

    #[test]
    fn drop_percent_fixture() {
        assert_eq!(f1_drop_percent(0.41, 0.04), 90.0);
        assert_eq!(f1_drop_percent(0.41, 0.41), 0.0);
    }

    #[test]
    fn empty_spec_list_rejected() {
        let dataset = comparison_dataset(8);
        assert!(run_comparison(&dataset, &[], &ComparisonConfig::default()).is_err());
    }
}
