//! Implementations of the eight subcommands.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use segdet_core::changepoint::{changefinder_score, extract_changepoints};
use segdet_core::clustering::ClusterValidation;
use segdet_core::cpfeatures::{
    append_cp_feature_columns, compute_cp_features, select_features,
};
use segdet_core::data::{
    align_labels, handle_missing, parse_frame, parse_noc, write_frame_csv, write_noc_csv,
    LabelInterval, LabelTimeline, LabeledDataset, TimeSeriesFrame,
};
use segdet_core::detectors::{
    fit_pca, train_isolation_forest, train_kmeans_detector, train_ocsvm, ModelArtifact,
};
use segdet_core::error::{Error, Result};
use segdet_core::evaluation::{optimal_f1_threshold, EvalReport, ThresholdRule as EvalRule};
use segdet_core::hybrid::{
    build_pipeline, run_comparison, train_ensemble_rf_gbt, ComparisonConfig, ComparisonSpec,
    EnsembleParams, FeatureMode, FinalStageSpec, OneClassStageSpec, PipelineSpec,
};
use segdet_core::importance::{
    category_summary, default_category_patterns, mdi_importance,
    permutation_importance_by_segment, PermutationConfig,
};
use segdet_core::segmentation::{
    assign_segments, delta_f, encode_segment_features, f_ratio, SegmentMap,
};
use segdet_core::synthgen::generate_scenario;

use crate::config::ExperimentConfig;
use crate::formats::{load_dataset, save_dataset, ChannelCps, CpsFile, CPS_SCHEMA_VERSION};

/// Creates the output directory and records the resolved configuration
/// inside it.
pub fn prepare_out_dir(out: &Path, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.resolved.toml"), config.to_toml()?)?;
    Ok(())
}

fn load_frame(path: &Path) -> Result<TimeSeriesFrame> {
    let text = crate::formats::read_file(path)?;
    parse_frame(text.as_bytes(), None)
}

pub fn cmd_synth(config: &ExperimentConfig, out: &Path) -> Result<()> {
    prepare_out_dir(out, config)?;
    let seed = config.seed()?;
    let scenario = generate_scenario(&config.synth.scenario(), seed)?;
    let mut frame_buf = Vec::new();
    write_frame_csv(&scenario.frame, &mut frame_buf)?;
    fs::write(out.join("frame.csv"), frame_buf)?;
    let mut noc_buf = Vec::new();
    write_noc_csv(&scenario.timeline, &mut noc_buf)?;
    fs::write(out.join("noc.csv"), noc_buf)?;
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&scenario.manifest)?,
    )?;
    println!(
        "synth: {} channels x {} rows, anomaly rows [{}, {})",
        scenario.frame.n_channels(),
        scenario.frame.n_rows(),
        scenario.manifest.anomaly_start_row,
        scenario.manifest.anomaly_end_row
    );
    Ok(())
}

pub fn cmd_cpd(config: &ExperimentConfig, frame_path: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(out, config)?;
    config.seed()?;
    let frame = load_frame(frame_path)?;
    let frame = handle_missing(&frame, config.featurize.missing_policy)?;
    let params = config.cpd.params();
    let rule = config.cpd.rule();

    let results: Vec<(String, _, _)> = (0..frame.n_channels())
        .into_par_iter()
        .map(|ch| {
            let name = frame.channel_names()[ch].clone();
            let cs = changefinder_score(frame.channel(ch), params)?;
            let cps = extract_changepoints(&cs, rule);
            Ok((name, cs, cps))
        })
        .collect::<Result<_>>()?;

    let mut channels = Vec::new();
    for (name, cs, cps) in &results {
        let mut file = std::io::BufWriter::new(fs::File::create(
            out.join(format!("cpd_{name}.csv")),
        )?);
        writeln!(file, "t,outlier_score,change_score,is_cp")?;
        let mut next_cp = 0usize;
        for t in 0..cs.len() {
            let is_cp = next_cp < cps.indices.len() && cps.indices[next_cp] == t;
            if is_cp {
                next_cp += 1;
            }
            writeln!(
                file,
                "{t},{},{},{}",
                cs.outlier_scores[t],
                cs.change_scores[t],
                u8::from(is_cp)
            )?;
        }
        channels.push(ChannelCps { name: name.clone(), indices: cps.indices.clone() });
    }
    let cps_file = CpsFile { schema_version: CPS_SCHEMA_VERSION, params, rule, channels };
    cps_file.save(&out.join("cps.json"))?;
    let total: usize = cps_file.channels.iter().map(|c| c.indices.len()).sum();
    println!("cpd: {} channels scored, {total} change points", frame.n_channels());
    Ok(())
}

/// Derives one segment map per channel from a cps file.
fn segment_maps(cps: &CpsFile, n_rows: usize) -> Result<Vec<(String, SegmentMap)>> {
    cps.channels
        .iter()
        .map(|c| {
            let list = cps.cp_list(&c.name).expect("channel exists");
            Ok((c.name.clone(), assign_segments(&list, n_rows)?))
        })
        .collect()
}

pub fn cmd_featurize(
    config: &ExperimentConfig,
    frame_path: &Path,
    noc_path: Option<&Path>,
    cps_path: &Path,
    out: &Path,
) -> Result<()> {
    prepare_out_dir(out, config)?;
    config.seed()?;
    let frame = load_frame(frame_path)?;
    let frame = handle_missing(&frame, config.featurize.missing_policy)?;
    let timeline = match noc_path {
        Some(path) => parse_noc(crate::formats::read_file(path)?.as_bytes())?,
        None => LabelTimeline::default(),
    };
    let cps = CpsFile::load(cps_path)?;

    let outcome = align_labels(&frame, &timeline)?;
    if outcome.no_overlap_warning {
        eprintln!("warning: label timeline does not overlap the frame; labels are all normal");
    }
    let mut dataset = outcome.dataset;

    if config.featurize.cp_features {
        let freq_window = if config.featurize.freq_window == 0 {
            ((86_400.0 / frame.step_seconds()).round() as usize).max(1)
        } else {
            config.featurize.freq_window
        };
        // Change-point features consume the stage-1 outlier scores, which
        // are recomputed from the stored parameters.
        let blocks: Vec<(String, Vec<_>)> = cps
            .channels
            .par_iter()
            .map(|c| {
                let values = frame
                    .channel_by_name(&c.name)
                    .ok_or_else(|| Error::RejectedInput(format!("channel {} not in frame", c.name)))?;
                let cs = changefinder_score(values, cps.params)?;
                let list = cps.cp_list(&c.name).expect("channel exists");
                let blocks =
                    compute_cp_features(&cs.outlier_scores, &list, freq_window, 0..values.len())?;
                Ok((c.name.clone(), blocks))
            })
            .collect::<Result<_>>()?;
        for (name, blocks) in &blocks {
            append_cp_feature_columns(&mut dataset, name, blocks)?;
        }
    }

    let maps = segment_maps(&cps, frame.n_rows())?;
    encode_segment_features(&mut dataset, &maps, None)?;

    if !config.featurize.select.is_empty() {
        dataset = select_features(&dataset, &config.featurize.select)?;
    }
    save_dataset(&dataset, &out.join("dataset.csv"))?;

    // Separability report: each feature scored against the segment map of
    // the channel it was derived from. The longest matching channel prefix
    // wins so names like ch1 and ch10 cannot shadow each other.
    let mut report = String::from("feature,f_ratio,capped\n");
    let mut rows: Vec<(String, f64, bool)> = Vec::new();
    for col in &dataset.columns {
        let Some((_, map)) = maps
            .iter()
            .filter(|(ch, _)| col.name.starts_with(ch.as_str()))
            .max_by_key(|(ch, _)| ch.len())
        else {
            continue;
        };
        let groups: Vec<i64> = map.ids.iter().map(|&id| id as i64).collect();
        if let Ok(stats) = f_ratio(&col.values, &groups) {
            rows.push((col.name.clone(), stats.f_ratio, stats.capped));
        }
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for (feature, value, capped) in rows {
        report.push_str(&format!("{feature},{value},{capped}\n"));
    }
    fs::write(out.join("fratio_report.csv"), report)?;

    println!(
        "featurize: {} rows x {} features, prevalence {:.4}",
        dataset.n_rows(),
        dataset.n_features(),
        dataset.prevalence()
    );
    Ok(())
}

pub fn cmd_cluster(
    config: &ExperimentConfig,
    dataset_path: &Path,
    cps_path: &Path,
    out: &Path,
) -> Result<()> {
    prepare_out_dir(out, config)?;
    let seed = config.seed()?;
    let mut dataset = load_dataset(dataset_path)?;
    let cps = CpsFile::load(cps_path)?;
    let maps = segment_maps(&cps, dataset.n_rows())?;
    let names = config.cluster.algo_names();
    if names.is_empty() {
        return Err(Error::RejectedInput(format!(
            "unknown clustering algorithm {:?}",
            config.cluster.algo
        )));
    }

    // Per-algorithm averaged metrics table.
    let mut table: Vec<(String, ClusterValidation)> = Vec::new();
    let mut labels_by_algo = std::collections::HashMap::new();
    for (algo_idx, name) in names.iter().enumerate() {
        let algo = config.cluster.algo_params(name)?;
        // Subcluster columns come from the last algorithm run unless a
        // single algorithm was requested; per-algorithm labels are kept
        // for the delta-F computation.
        let mut scratch = dataset.clone();
        let outcome = segdet_core::clustering::cluster_per_segment(
            &mut scratch,
            &maps,
            &algo,
            config.cluster.min_segment_size,
            segdet_core::derive_seed(seed, algo_idx as u64),
        )?;
        table.push((name.to_string(), outcome.averaged));
        labels_by_algo.insert(name.to_string(), outcome.labels_per_channel.clone());
        if algo_idx + 1 == names.len() {
            // Keep this algorithm's subcluster columns.
            dataset = scratch;
        }
    }

    // Metrics CSV with min-max normalized companions (Davies-Bouldin
    // inverted so larger is better in every normalized column).
    let mut csv = String::from(
        "algorithm,silhouette,ch,db,silhouette_norm,ch_norm,db_norm\n",
    );
    let collect = |f: fn(&ClusterValidation) -> Option<f64>| -> Vec<f64> {
        table.iter().filter_map(|(_, v)| f(v)).collect()
    };
    let norm = |value: Option<f64>, values: &[f64], invert: bool| -> String {
        match value {
            None => "nan".into(),
            Some(v) => {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                format!("{}", if invert { 1.0 - scaled } else { scaled })
            }
        }
    };
    let sil_all = collect(|v| v.silhouette);
    let ch_all = collect(|v| v.calinski_harabasz);
    let db_all = collect(|v| v.davies_bouldin);
    for (name, v) in &table {
        let fmt = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v}"));
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            fmt(v.silhouette),
            fmt(v.calinski_harabasz),
            fmt(v.davies_bouldin),
            norm(v.silhouette, &sil_all, false),
            norm(v.calinski_harabasz, &ch_all, false),
            norm(v.davies_bouldin, &db_all, true),
        ));
    }
    fs::write(out.join("cluster_metrics.csv"), csv)?;

    // Delta-F needs both density labelings.
    if let (Some(optics_labels), Some(hdbscan_labels)) =
        (labels_by_algo.get("optics"), labels_by_algo.get("hdbscan"))
    {
        let mut dfs = Vec::new();
        let mut report = String::from("channel,scope,delta_f\n");
        for ((ch, a), (_, b)) in optics_labels.iter().zip(hdbscan_labels) {
            let values = &dataset
                .column_by_name(ch)
                .ok_or_else(|| Error::RejectedInput(format!("channel column {ch} missing")))?
                .values;
            let df = delta_f(values, a, b)?;
            report.push_str(&format!(
                "{ch},channel,{}\n",
                df.map_or("nan".to_string(), |v| format!("{v}"))
            ));
            // Per-segment delta-F rows for the report.
            if let Some((_, map)) = maps.iter().find(|(name, _)| name == ch) {
                for (segment, (lo, hi)) in map.segment_ranges().into_iter().enumerate() {
                    let seg_df = delta_f(&values[lo..hi], &a[lo..hi], &b[lo..hi])?;
                    report.push_str(&format!(
                        "{ch},segment-{segment},{}\n",
                        seg_df.map_or("nan".to_string(), |v| format!("{v}"))
                    ));
                }
            }
            dfs.push((ch.clone(), df));
        }
        fs::write(out.join("delta_f_report.csv"), report)?;
        encode_segment_features(&mut dataset, &[], Some(&dfs))?;
    }

    save_dataset(&dataset, &out.join("dataset_clustered.csv"))?;
    println!("cluster: {} algorithm(s) over {} channels", table.len(), maps.len());
    Ok(())
}

/// Resolves a pipeline preset name (or spec file path) into a spec.
pub fn resolve_pipeline(config: &ExperimentConfig, seed: u64) -> Result<PipelineSpec> {
    let train = &config.train;
    let name = train.pipeline.as_str();
    let spec = match name {
        "rf" => PipelineSpec::supervised("rf", FinalStageSpec::Rf(train.rf_params(seed))),
        "gbt" => PipelineSpec::supervised("gbt", FinalStageSpec::Gbt(train.gbt_params(seed))),
        "ensemble" => PipelineSpec::supervised(
            "ensemble",
            FinalStageSpec::Ensemble(EnsembleParams {
                rf: train.rf_params(seed),
                gbt: train.gbt_params(segdet_core::derive_seed(seed, 1)),
            }),
        ),
        "iforest" => PipelineSpec {
            name: "iforest".into(),
            reducer: None,
            one_class: Some(OneClassStageSpec::Iforest(train.iforest_params(seed))),
            final_stage: None,
            mode: FeatureMode::Replace,
        },
        "ocsvm" => PipelineSpec {
            name: "ocsvm".into(),
            reducer: None,
            one_class: Some(OneClassStageSpec::Ocsvm(train.ocsvm_params(seed))),
            final_stage: None,
            mode: FeatureMode::Replace,
        },
        "pca-ocsvm" => PipelineSpec {
            name: "pca-ocsvm".into(),
            reducer: Some(train.pca_params()),
            one_class: Some(OneClassStageSpec::Ocsvm(train.ocsvm_params(seed))),
            final_stage: None,
            mode: FeatureMode::Replace,
        },
        "pca-gbt" => PipelineSpec {
            name: "pca-gbt".into(),
            reducer: Some(train.pca_params()),
            one_class: None,
            final_stage: Some(FinalStageSpec::Gbt(train.gbt_params(seed))),
            mode: FeatureMode::Replace,
        },
        "ocsvm-rf" => PipelineSpec {
            name: "ocsvm-rf".into(),
            reducer: None,
            one_class: Some(OneClassStageSpec::Ocsvm(train.ocsvm_params(seed))),
            final_stage: Some(FinalStageSpec::Rf(train.rf_params(seed))),
            mode: FeatureMode::Augment,
        },
        "ocsvm-gbt" => PipelineSpec {
            name: "ocsvm-gbt".into(),
            reducer: None,
            one_class: Some(OneClassStageSpec::Ocsvm(train.ocsvm_params(seed))),
            final_stage: Some(FinalStageSpec::Gbt(train.gbt_params(seed))),
            mode: FeatureMode::Augment,
        },
        path if Path::new(path).exists() => {
            let text = crate::formats::read_file(Path::new(path))?;
            serde_json::from_str(&text)?
        }
        other => {
            return Err(Error::RejectedInput(format!(
                "unknown pipeline preset or missing spec file {other:?}"
            )))
        }
    };
    Ok(spec)
}

pub fn cmd_train(config: &ExperimentConfig, dataset_path: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(out, config)?;
    let seed = config.seed()?;
    let dataset = load_dataset(dataset_path)?;
    let x = dataset.feature_matrix();
    let name = config.train.pipeline.as_str();

    let artifact: ModelArtifact = match name {
        // Plain detectors train outside the pipeline wrapper so their
        // artifacts carry the bare kind tag.
        "pca" => fit_pca(&x, &config.train.pca_params())?,
        "kmeans-det" => train_kmeans_detector(&x, &config.train.kmeans_params(seed))?,
        "iforest" => train_isolation_forest(&x, &config.train.iforest_params(seed))?,
        "ocsvm" => train_ocsvm(&x, &config.train.ocsvm_params(seed))?,
        "ensemble" => train_ensemble_rf_gbt(
            &x,
            &dataset.labels,
            &EnsembleParams {
                rf: config.train.rf_params(seed),
                gbt: config.train.gbt_params(segdet_core::derive_seed(seed, 1)),
            },
        )?,
        _ => {
            let spec = resolve_pipeline(config, seed)?;
            let pipeline = build_pipeline(spec)?;
            let labels = pipeline.spec().is_supervised().then_some(dataset.labels.as_slice());
            pipeline.train(&x, labels)?
        }
    };
    fs::write(out.join("model.json"), artifact.to_json()?)?;
    println!(
        "train: {} model over {} features ({} rows)",
        artifact.kind(),
        artifact.feature_names.len(),
        dataset.n_rows()
    );
    Ok(())
}

/// Rebuilds the anomalous-interval timeline from per-row labels when no
/// label file is supplied.
fn timeline_from_labels(dataset: &LabeledDataset) -> Result<LabelTimeline> {
    let mut intervals = Vec::new();
    let step = chrono::Duration::milliseconds((dataset.step_seconds * 1000.0).round() as i64);
    let mut run_start: Option<usize> = None;
    for (i, &label) in dataset.labels.iter().enumerate() {
        if label && run_start.is_none() {
            run_start = Some(i);
        }
        if !label {
            if let Some(start) = run_start.take() {
                intervals.push(LabelInterval {
                    start: dataset.timestamps[start],
                    end: dataset.timestamps[i],
                    state: segdet_core::data::IntervalState::Anomalous,
                });
            }
        }
    }
    if let Some(start) = run_start {
        intervals.push(LabelInterval {
            start: dataset.timestamps[start],
            end: dataset.timestamps[dataset.n_rows() - 1] + step,
            state: segdet_core::data::IntervalState::Anomalous,
        });
    }
    LabelTimeline::new(intervals)
}

pub fn cmd_evaluate(
    config: &ExperimentConfig,
    model_path: &Path,
    dataset_path: &Path,
    noc_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    prepare_out_dir(out, config)?;
    config.seed()?;
    let artifact = ModelArtifact::from_json(&crate::formats::read_file(model_path)?)?;
    let dataset = load_dataset(dataset_path)?;
    let timeline = match noc_path {
        Some(path) => parse_noc(crate::formats::read_file(path)?.as_bytes())?,
        None => timeline_from_labels(&dataset)?,
    };
    let scores = artifact.score(&dataset.feature_matrix())?;

    // Both candidate thresholds are always emitted; the configured rule
    // picks which one backs the report.
    let quantile_threshold = artifact.quantile_threshold(config.evaluate.expected_rate);
    let optimal = optimal_f1_threshold(&scores, &dataset.labels).ok();
    let (threshold, rule) = match config.evaluate.threshold_rule.as_str() {
        "quantile" => (quantile_threshold, EvalRule::TrainQuantile),
        "optimal-f1" => {
            let (tau, _) = optimal.ok_or_else(|| {
                Error::Undefined("optimal-f1 threshold needs both classes in the labels".into())
            })?;
            (tau, EvalRule::OptimalF1)
        }
        other => {
            return Err(Error::RejectedInput(format!(
                "unknown threshold rule {other:?} (use optimal-f1 or quantile)"
            )))
        }
    };
    let report = EvalReport::assemble(
        &scores,
        &dataset.labels,
        &timeline,
        &dataset.timestamps,
        dataset.step_seconds,
        threshold,
        rule,
    )?;
    fs::write(out.join("report.json"), report.to_json()?)?;
    fs::write(out.join("report.csv"), report.to_csv())?;
    let thresholds = serde_json::json!({
        "quantile": {
            "expected_anomaly_rate": config.evaluate.expected_rate,
            "threshold": quantile_threshold,
        },
        "optimal_f1": optimal.map(|(tau, f1)| serde_json::json!({
            "threshold": tau,
            "f1": f1,
        })),
    });
    fs::write(out.join("thresholds.json"), serde_json::to_string_pretty(&thresholds)?)?;

    // Pretty print in the report-table cell style.
    let fmt = |v: Option<f64>| v.map_or("nan".to_string(), |x| format!("{x:.4}"));
    println!("AUC-ROC: {}", fmt(report.auc_roc));
    println!("AP: {}", fmt(report.average_precision));
    println!("F1-score: {:.4}", report.f1);
    println!("Threshold: {:.6} ({:?})", report.threshold, report.threshold_rule);
    println!(
        "TTD (mean steps): {}",
        report.ttd_mean_steps.map_or("nan".to_string(), |v| format!("{v:.2}"))
    );
    let etp = segdet_core::evaluation::EtpResult {
        detected: report.etp_detected,
        total: report.etp_total,
        percent: report.etp_percent.unwrap_or(f64::NAN),
    };
    println!("ETP: {}", etp.render());
    Ok(())
}

/// The built-in five-row comparison: the ensemble baseline, the two
/// change-point feature subsets, and the two leading hybrids.
pub fn default_comparison_specs(config: &ExperimentConfig, seed: u64) -> Vec<ComparisonSpec> {
    let train = &config.train;
    let ensemble = |s: u64| {
        FinalStageSpec::Ensemble(EnsembleParams {
            rf: train.rf_params(s),
            gbt: train.gbt_params(segdet_core::derive_seed(s, 1)),
        })
    };
    vec![
        ComparisonSpec {
            name: "baseline".into(),
            feature_patterns: None,
            pipeline: PipelineSpec::supervised("ensemble", ensemble(seed)),
        },
        ComparisonSpec {
            name: "cp-features-all".into(),
            feature_patterns: Some(vec![
                "*_mean_score_pre_cp".into(),
                "*_dist_last_cp".into(),
                "*_max_score_pre_cp".into(),
                "*_std_score_pre_cp".into(),
                "*_cp_freq".into(),
            ]),
            pipeline: PipelineSpec::supervised(
                "ensemble",
                ensemble(segdet_core::derive_seed(seed, 2)),
            ),
        },
        ComparisonSpec {
            name: "cp-features-top3".into(),
            feature_patterns: Some(vec![
                "*_mean_score_pre_cp".into(),
                "*_std_score_pre_cp".into(),
                "*_max_score_pre_cp".into(),
            ]),
            pipeline: PipelineSpec::supervised(
                "ensemble",
                ensemble(segdet_core::derive_seed(seed, 3)),
            ),
        },
        ComparisonSpec {
            name: "pca-ocsvm".into(),
            feature_patterns: None,
            pipeline: PipelineSpec {
                name: "pca-ocsvm".into(),
                reducer: Some(train.pca_params()),
                one_class: Some(OneClassStageSpec::Ocsvm(
                    train.ocsvm_params(segdet_core::derive_seed(seed, 4)),
                )),
                final_stage: None,
                mode: FeatureMode::Replace,
            },
        },
        ComparisonSpec {
            name: "ocsvm-rf".into(),
            feature_patterns: None,
            pipeline: PipelineSpec {
                name: "ocsvm-rf".into(),
                reducer: None,
                one_class: Some(OneClassStageSpec::Ocsvm(
                    train.ocsvm_params(segdet_core::derive_seed(seed, 5)),
                )),
                final_stage: Some(FinalStageSpec::Rf(
                    train.rf_params(segdet_core::derive_seed(seed, 6)),
                )),
                mode: FeatureMode::Augment,
            },
        },
    ]
}

pub fn cmd_compare(config: &ExperimentConfig, dataset_path: &Path, out: &Path) -> Result<()> {
    prepare_out_dir(out, config)?;
    let seed = config.seed()?;
    let dataset = load_dataset(dataset_path)?;
    let specs: Vec<ComparisonSpec> = if config.compare.specs_file.is_empty() {
        default_comparison_specs(config, seed)
    } else {
        let text = crate::formats::read_file(Path::new(&config.compare.specs_file))?;
        serde_json::from_str(&text)?
    };
    let table = run_comparison(
        &dataset,
        &specs,
        &ComparisonConfig { split_fraction: config.compare.split_fraction },
    )?;
    fs::write(out.join("comparison.csv"), table.to_csv())?;
    fs::write(out.join("comparison.json"), table.to_json()?)?;
    for row in &table.rows {
        println!(
            "{:<20} auc {:.4}  f1 {:.4}  drop {}",
            row.approach,
            row.auc_roc,
            row.f1,
            row.f1_drop_pct.map_or("reference".to_string(), |d| format!("{d}%"))
        );
    }
    Ok(())
}

pub fn cmd_importance(
    config: &ExperimentConfig,
    model_path: &Path,
    dataset_path: &Path,
    cps_path: &Path,
    out: &Path,
) -> Result<()> {
    prepare_out_dir(out, config)?;
    let seed = config.seed()?;
    let artifact = ModelArtifact::from_json(&crate::formats::read_file(model_path)?)?;
    let dataset = load_dataset(dataset_path)?;
    let cps = CpsFile::load(cps_path)?;

    // Global impurity importances need a random forest; an ensemble's
    // forest member qualifies.
    let rf_view = match &artifact.payload {
        segdet_core::detectors::ModelPayload::Rf(_) => Some(artifact.clone()),
        segdet_core::detectors::ModelPayload::Ensemble { rf, .. } => Some(ModelArtifact {
            payload: segdet_core::detectors::ModelPayload::Rf(rf.clone()),
            ..artifact.clone()
        }),
        _ => None,
    };
    let global = match &rf_view {
        Some(view) => mdi_importance(view)?,
        None => {
            eprintln!(
                "warning: model kind {} has no impurity importances; global table is empty",
                artifact.kind()
            );
            Default::default()
        }
    };
    fs::write(out.join("importance_global.csv"), global.to_csv())?;

    // Top-k two-column table.
    let mut top = String::from("feature,importance\n");
    for row in global.ranked().into_iter().take(config.importance.top_k) {
        top.push_str(&format!("{},{}\n", row.feature, row.importance));
    }
    fs::write(out.join("importance_top.csv"), top)?;

    // Segment-scoped permutation importance over one channel's map.
    let channel = if config.importance.channel.is_empty() {
        cps.channels
            .first()
            .map(|c| c.name.clone())
            .ok_or_else(|| Error::RejectedInput("cps file has no channels".into()))?
    } else {
        config.importance.channel.clone()
    };
    let list = cps
        .cp_list(&channel)
        .ok_or_else(|| Error::RejectedInput(format!("channel {channel:?} not in cps file")))?;
    let map = assign_segments(&list, dataset.n_rows())?;
    let permutation = permutation_importance_by_segment(
        &artifact,
        &dataset.feature_matrix(),
        &dataset.labels,
        &map,
        &PermutationConfig {
            repetitions: config.importance.repetitions,
            accuracy_fallback: config.importance.accuracy_fallback,
            expected_anomaly_rate: config.importance.expected_rate,
            seed,
        },
    )?;
    if !permutation.skipped_segments.is_empty() {
        eprintln!(
            "warning: single-class segments skipped: {:?}",
            permutation.skipped_segments
        );
    }
    fs::write(out.join("importance_segments.csv"), permutation.to_csv())?;

    let summary = category_summary(&global, &permutation, &default_category_patterns());
    let mut matrix = String::from("category,global_share,segment_share\n");
    for (category, g, s) in &summary.rows {
        matrix.push_str(&format!("{category},{g},{s}\n"));
    }
    fs::write(out.join("category_matrix.csv"), matrix)?;
    println!(
        "importance: {} global rows, {} segment rows (map channel {channel})",
        global.rows.len(),
        permutation.rows.len()
    );
    Ok(())
}

