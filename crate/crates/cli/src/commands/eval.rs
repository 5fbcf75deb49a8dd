//! `eval`: score trained models on the held-out test rows.

use std::collections::BTreeMap;

use anyhow::{Context, Result};

use jamguard_core::datagen::{compute_feature_stats, normalize_features};
use jamguard_core::detect::{Detector, TrainedDetector};
use jamguard_core::esn::{extract_windows, EsnModel};
use jamguard_core::eval::{
    cross_validate_auc, per_scenario_curves, roc_to_csv, roc_to_svg, summarize_scores,
    time_stats, CurveSummary, EvalTiming, ModelEvalReport, RocCurve, DEFAULT_TIMING_REPS,
};

use crate::artifact::{write_text, ArtifactMeta};
use crate::config::PipelineConfig;
use crate::pipeline::{
    esn_training_rows, features_and_labels, load_data, load_detector, load_esn, score_rows,
    score_windows, windows_for, LoadedData, Workspace,
};

pub fn run(
    config: &PipelineConfig,
    ws: &Workspace,
    model_filter: Option<&str>,
    with_timing: bool,
) -> Result<()> {
    let meta = ArtifactMeta::for_config(config);
    let data = load_data(ws, &meta)?;

    let mut names: Vec<String> = config.models.clone();
    names.push("esn".to_string());
    if let Some(filter) = model_filter {
        if !names.iter().any(|n| n == filter) {
            anyhow::bail!(
                "unknown model '{filter}' (this configuration evaluates: {})",
                names.join(", ")
            );
        }
        names.retain(|n| n == filter);
    }

    let mut curves: Vec<(String, RocCurve)> = Vec::new();
    let mut reports: Vec<ModelEvalReport> = Vec::new();
    for name in &names {
        let (report, curve) = if name == "esn" {
            eval_esn(config, ws, &meta, &data, with_timing)?
        } else {
            eval_detector(config, ws, &meta, &data, name, with_timing)?
        };
        crate::artifact::write_json(&ws.eval_report(name), &report)?;
        write_text(&ws.roc_csv(name), &roc_to_csv(&curve))?;
        println!(
            "eval: {name} test AUC {:.4}, cross-validation mean {:.4}, Youden J {:.4}",
            report.pooled.auc, report.fold_auc_mean, report.pooled.youden.j
        );
        curves.push((name.clone(), curve));
        reports.push(report);
    }

    let named: Vec<(String, &RocCurve)> =
        curves.iter().map(|(n, c)| (n.clone(), c)).collect();
    write_text(&ws.roc_svg(), &roc_to_svg(&named))?;
    write_text(&ws.eval_summary(), &summary_markdown(&meta, &reports))?;
    println!("eval: wrote {}", ws.eval_summary().display());
    Ok(())
}

fn scenario_ids_of(data: &LoadedData, rows: &[usize]) -> Vec<String> {
    rows.iter()
        .map(|&i| data.dataset.rows[i].scenario_id.clone())
        .collect()
}

fn flatten_scenarios(
    per_scenario: BTreeMap<String, (CurveSummary, RocCurve)>,
) -> BTreeMap<String, CurveSummary> {
    per_scenario
        .into_iter()
        .map(|(k, (summary, _))| (k, summary))
        .collect()
}

fn eval_detector(
    config: &PipelineConfig,
    ws: &Workspace,
    meta: &ArtifactMeta,
    data: &LoadedData,
    name: &str,
    with_timing: bool,
) -> Result<(ModelEvalReport, RocCurve)> {
    let detector = load_detector(ws, meta, name)?;
    let test = &data.assignments.test;
    let (x_test, y_test) = features_and_labels(&data.dataset, test, &data.stats)?;
    let scores = score_rows(detector.as_detector(), &x_test)
        .with_context(|| format!("scoring test rows with {name}"))?;
    let (pooled, curve) = summarize_scores(&scores, &y_test)?;
    let per_scenario =
        per_scenario_curves(&scores, &y_test, &scenario_ids_of(data, test))?;

    // Cross-validation refits from scratch per fold, with normalization
    // statistics recomputed on that fold's training rows only.
    let seed = config.seed;
    let (fold_aucs, fold_auc_mean) = cross_validate_auc(&data.assignments, |train, val| {
        let stats = compute_feature_stats(&data.dataset, train)?;
        let x_train = normalize_features(&data.dataset, train, &stats)?;
        let y_train: Vec<bool> = train.iter().map(|&i| data.dataset.rows[i].label).collect();
        let mut fold_model = TrainedDetector::from_name(name, seed)?;
        fold_model.fit(&x_train, &y_train)?;
        let x_val = normalize_features(&data.dataset, val, &stats)?;
        let val_scores = x_val
            .iter()
            .map(|row| fold_model.score(row))
            .collect::<jamguard_core::Result<Vec<f64>>>()?;
        let y_val = val.iter().map(|&i| data.dataset.rows[i].label).collect();
        Ok((val_scores, y_val))
    })?;

    let timing = if with_timing {
        let train_rows = data.assignments.train();
        let (x_train, y_train) = features_and_labels(&data.dataset, &train_rows, &data.stats)?;
        let fit = time_stats(3, || {
            let mut fresh = TrainedDetector::from_name(name, seed).expect("known name");
            fresh.fit(&x_train, &y_train).expect("fit succeeds");
        })?;
        let score = time_stats(DEFAULT_TIMING_REPS, || {
            for row in &x_test {
                detector.score(row).expect("score succeeds");
            }
        })?;
        Some(EvalTiming {
            fit_ms: fit.median_ms(),
            score_per_sample_us: score.median_us / x_test.len() as f64,
            timing_reps: DEFAULT_TIMING_REPS,
        })
    } else {
        None
    };

    let report = ModelEvalReport {
        model: name.to_string(),
        tool_version: meta.tool_version.clone(),
        config_hash: meta.config_hash.clone(),
        seed: meta.seed,
        trainable_parameters: detector.trainable_parameters(),
        pooled,
        per_scenario: flatten_scenarios(per_scenario),
        fold_aucs,
        fold_auc_mean,
        timing,
    };
    Ok((report, curve))
}

fn eval_esn(
    config: &PipelineConfig,
    ws: &Workspace,
    meta: &ArtifactMeta,
    data: &LoadedData,
    with_timing: bool,
) -> Result<(ModelEvalReport, RocCurve)> {
    let esn = load_esn(ws, meta)?;
    let test_windows = windows_for(
        &data.dataset,
        &data.assignments.test,
        config.esn.window_len,
        &data.stats,
    )?;
    let scores = score_windows(&esn, &test_windows).context("scoring test windows")?;
    let (pooled, curve) = summarize_scores(&scores, &test_windows.labels)?;
    let per_scenario =
        per_scenario_curves(&scores, &test_windows.labels, &test_windows.scenario_ids)?;

    // Fold models repeat the training recipe, including the deliberate
    // train-fraction cut, so fold AUCs describe the model actually shipped.
    let params = config.esn;
    let fraction = config.esn_train_fraction;
    let (fold_aucs, fold_auc_mean) = cross_validate_auc(&data.assignments, |train, val| {
        let stats = compute_feature_stats(&data.dataset, train)?;
        let fit_rows = esn_training_rows(train, fraction);
        let fit_windows = extract_windows(&data.dataset, &fit_rows, params.window_len, Some(&stats))?;
        let mut fold_model = EsnModel::new(params)?;
        fold_model.fit_readout(&fit_windows.windows, &fit_windows.labels)?;
        let val_windows = extract_windows(&data.dataset, val, params.window_len, Some(&stats))?;
        let val_scores = val_windows
            .windows
            .iter()
            .map(|w| fold_model.score(w))
            .collect::<jamguard_core::Result<Vec<f64>>>()?;
        Ok((val_scores, val_windows.labels))
    })?;

    let timing = if with_timing {
        let train_rows = data.assignments.train();
        let fit_rows = esn_training_rows(&train_rows, fraction);
        let fit_windows = windows_for(&data.dataset, &fit_rows, params.window_len, &data.stats)?;
        let fit = time_stats(3, || {
            let mut fresh = EsnModel::new(params).expect("valid params");
            fresh
                .fit_readout(&fit_windows.windows, &fit_windows.labels)
                .expect("fit succeeds");
        })?;
        let score = time_stats(DEFAULT_TIMING_REPS, || {
            for w in &test_windows.windows {
                esn.score(w).expect("score succeeds");
            }
        })?;
        Some(EvalTiming {
            fit_ms: fit.median_ms(),
            score_per_sample_us: score.median_us / test_windows.len() as f64,
            timing_reps: DEFAULT_TIMING_REPS,
        })
    } else {
        None
    };

    let report = ModelEvalReport {
        model: "esn".to_string(),
        tool_version: meta.tool_version.clone(),
        config_hash: meta.config_hash.clone(),
        seed: meta.seed,
        trainable_parameters: esn.trainable_parameters(),
        pooled,
        per_scenario: flatten_scenarios(per_scenario),
        fold_aucs,
        fold_auc_mean,
        timing,
    };
    Ok((report, curve))
}

/// Headline table: one row per model, pooled test metrics plus CV mean.
pub fn model_table(reports: &[ModelEvalReport]) -> String {
    let mut out = String::from(
        "| Model | Test AUC | CV mean AUC | Youden J | Threshold | TPR | FPR | Parameters |\n\
         |---|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in reports {
        out.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {} |\n",
            r.model,
            r.pooled.auc,
            r.fold_auc_mean,
            r.pooled.youden.j,
            r.pooled.youden.threshold,
            r.pooled.youden.tpr,
            r.pooled.youden.fpr,
            r.trainable_parameters
        ));
    }
    out
}

/// Scenario-by-model AUC matrix; empty string when nothing is scenario-keyed.
pub fn scenario_table(reports: &[ModelEvalReport]) -> String {
    let mut scenarios: Vec<&String> = reports
        .iter()
        .flat_map(|r| r.per_scenario.keys())
        .collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    if scenarios.is_empty() {
        return String::new();
    }
    let mut out = String::from("| Scenario |");
    for r in reports {
        out.push_str(&format!(" {} |", r.model));
    }
    out.push_str("\n|---|");
    for _ in reports {
        out.push_str("---:|");
    }
    out.push('\n');
    for scenario in scenarios {
        out.push_str(&format!("| {scenario} |"));
        for r in reports {
            match r.per_scenario.get(scenario) {
                Some(s) => out.push_str(&format!(" {:.4} |", s.auc)),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

/// Renders the evaluation summary tables.
pub fn summary_markdown(meta: &ArtifactMeta, reports: &[ModelEvalReport]) -> String {
    let mut out = String::from("# Evaluation summary\n\n");
    out.push_str(&format!(
        "Config hash `{}`, seed {}, tool version {}.\n\n",
        meta.config_hash, meta.seed, meta.tool_version
    ));
    out.push_str(
        "Pooled columns score the full held-out test set; the cross-validation \
         mean averages fold AUCs over the training portion.\n\n",
    );
    out.push_str(&model_table(reports));

    let scenarios = scenario_table(reports);
    if !scenarios.is_empty() {
        out.push_str("\n## Per-scenario test AUC\n\n");
        out.push_str(
            "Each scenario's jammed test samples against the pooled clean test samples.\n\n",
        );
        out.push_str(&scenarios);
    }

    let timed: Vec<&ModelEvalReport> =
        reports.iter().filter(|r| r.timing.is_some()).collect();
    if !timed.is_empty() {
        out.push_str("\n## Measured runtimes\n\n");
        out.push_str(
            "| Model | Training (ms) | Inference per sample (us) |\n|---|---:|---:|\n",
        );
        for r in timed {
            let t = r.timing.as_ref().expect("filtered on Some");
            out.push_str(&format!(
                "| {} | {:.1} | {:.1} |\n",
                r.model, t.fit_ms, t.score_per_sample_us
            ));
        }
    }
    out
}
