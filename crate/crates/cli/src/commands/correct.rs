//! `correct`: posterior-guided review of borderline sequential decisions.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use jamguard_core::bayes::{evidence_cell, KpiBayesModel};
use jamguard_core::correction::{
    correct_predictions, error_cluster_summary, CorrectionReport, ErrorClusters,
    QuadrantKpiSummary, QuadrantPosteriorMeans,
};
use jamguard_core::esn::WindowSet;
use jamguard_core::eval::{roc_curve, youden_threshold};
use jamguard_core::kpi::KpiSample;

use crate::artifact::{write_json, write_text, ArtifactMeta};
use crate::commands::bnm::{discretize_query, EvidenceQuery};
use crate::config::PipelineConfig;
use crate::pipeline::{load_bnm, load_data, load_esn, score_windows, windows_for, Workspace};

/// Full outcome of one correction pass, as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionArtifact {
    pub meta: ArtifactMeta,
    /// Scenario the pass was restricted to, if any.
    pub scenario: Option<String>,
    pub report: CorrectionReport,
    /// Mean KPI evidence per confusion quadrant of the original decisions.
    pub clusters: ErrorClusters,
    /// Jamming posterior evaluated at each quadrant's mean KPI evidence.
    pub posterior_at_cluster_means: QuadrantPosteriorMeans,
}

pub fn run(config: &PipelineConfig, ws: &Workspace, scenario: Option<&str>) -> Result<()> {
    let meta = ArtifactMeta::for_config(config);
    let data = load_data(ws, &meta)?;
    let esn = load_esn(ws, &meta)?;
    let model = load_bnm(ws, &meta)?;

    // Operating point from training windows only; the held-out windows the
    // correction runs on never touch the threshold choice.
    let train_rows = data.assignments.train();
    let train_windows = windows_for(&data.dataset, &train_rows, config.esn.window_len, &data.stats)?;
    let train_scores = score_windows(&esn, &train_windows)?;
    let curve = roc_curve(&train_scores, &train_windows.labels)?;
    let threshold = youden_threshold(&curve)?.threshold;
    println!("correct: decision threshold {threshold:.4} (Youden point on training windows)");

    let mut windows = windows_for(
        &data.dataset,
        &data.assignments.test,
        config.esn.window_len,
        &data.stats,
    )?;
    if let Some(id) = scenario {
        windows = filter_scenario(windows, id)?;
        println!("correct: restricted to scenario {id}: {} test windows", windows.len());
    }

    let scores = score_windows(&esn, &windows).context("scoring test windows")?;
    let samples: Vec<KpiSample> = windows
        .final_row_indices
        .iter()
        .map(|&i| evidence_cell(&data.dataset.rows[i]).clone())
        .collect();
    let posteriors = window_posteriors(&model, &samples);
    let report = correct_predictions(
        &scores,
        &windows.labels,
        threshold,
        &posteriors,
        &config.correction,
    )?;
    if report.skipped_missing > 0 {
        log::warn!(
            "{} borderline windows had no posterior and were left unchanged",
            report.skipped_missing
        );
    }

    let clusters = error_cluster_summary(&scores, &windows.labels, threshold, &samples)?;
    let posterior_at_cluster_means = QuadrantPosteriorMeans {
        true_positive: cluster_mean_posterior(&model, clusters.true_positive.as_ref()),
        false_positive: cluster_mean_posterior(&model, clusters.false_positive.as_ref()),
        true_negative: cluster_mean_posterior(&model, clusters.true_negative.as_ref()),
        false_negative: cluster_mean_posterior(&model, clusters.false_negative.as_ref()),
    };

    let artifact = CorrectionArtifact {
        meta,
        scenario: scenario.map(str::to_string),
        report,
        clusters,
        posterior_at_cluster_means,
    };
    write_json(&ws.correction_json(), &artifact)?;
    write_text(&ws.correction_md(), &correction_markdown(&artifact, "#"))?;

    let r = &artifact.report;
    println!(
        "correct: {} windows, {} flips; fixed {}/{} false negatives and {}/{} false positives{}",
        r.n_windows,
        r.flips,
        r.fixed_false_negatives,
        r.prior_false_negatives,
        r.fixed_false_positives,
        r.prior_false_positives,
        match r.combined_fixed_fraction {
            Some(f) => format!(" ({:.1}% of all errors)", f * 100.0),
            None => String::new(),
        }
    );
    println!(
        "correct: newly broken {} of {} previously correct; accuracy {:.4} -> {:.4}",
        r.newly_broken, r.prior_correct, r.accuracy_before, r.accuracy_after
    );
    Ok(())
}

/// Keeps only the windows of one scenario (its jammed and clean streams).
fn filter_scenario(set: WindowSet, scenario: &str) -> Result<WindowSet> {
    let keep: Vec<usize> = (0..set.len())
        .filter(|&i| set.scenario_ids[i] == scenario)
        .collect();
    if keep.is_empty() {
        let mut available: Vec<&String> = set.scenario_ids.iter().collect();
        available.sort_unstable();
        available.dedup();
        anyhow::bail!(
            "scenario '{scenario}' has no test windows (available: {})",
            available
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(WindowSet {
        windows: keep.iter().map(|&i| set.windows[i].clone()).collect(),
        labels: keep.iter().map(|&i| set.labels[i]).collect(),
        scenario_ids: keep.iter().map(|&i| set.scenario_ids[i].clone()).collect(),
        final_row_indices: keep.iter().map(|&i| set.final_row_indices[i]).collect(),
    })
}

/// Jamming posterior per window, memoized by discretized evidence.
///
/// Distinct evidence combinations number at most the product of the bin
/// cardinalities, so the cache keeps inference cost independent of window
/// count. A failed query logs a warning and yields `None`, which the
/// correction pass counts as skipped.
fn window_posteriors(model: &KpiBayesModel, samples: &[KpiSample]) -> Vec<Option<f64>> {
    let mut cache: BTreeMap<BTreeMap<String, String>, Option<f64>> = BTreeMap::new();
    samples
        .iter()
        .map(|sample| {
            let evidence = match model.evidence_from_sample(sample) {
                Ok((evidence, _)) => evidence,
                Err(err) => {
                    log::warn!("evidence unavailable for a window: {err}");
                    return None;
                }
            };
            *cache.entry(evidence.clone()).or_insert_with(|| {
                match model.posterior_jamming(&evidence) {
                    Ok(p) => Some(p),
                    Err(err) => {
                        log::warn!("posterior query failed: {err}");
                        None
                    }
                }
            })
        })
        .collect()
}

/// Posterior at a quadrant's mean KPI evidence, when the quadrant is
/// non-empty and its evidence is representable.
fn cluster_mean_posterior(
    model: &KpiBayesModel,
    summary: Option<&QuadrantKpiSummary>,
) -> Option<f64> {
    let s = summary?;
    let query = EvidenceQuery {
        snr: Some(s.mean_pusch_snr_db),
        cqi: Some(s.mean_cqi),
        dl_mcs: Some(s.mean_dl_mcs),
        ul_mcs: Some(s.mean_ul_mcs),
    };
    let (evidence, _) = discretize_query(model, &query).ok()?;
    model.posterior_jamming(&evidence).ok()
}

/// Renders the correction outcome as Markdown; `heading` is `#` when the
/// document stands alone and `##` when embedded in the pipeline report.
pub fn correction_markdown(artifact: &CorrectionArtifact, heading: &str) -> String {
    let r = &artifact.report;
    let fn_after = r.prior_false_negatives - r.fixed_false_negatives;
    let fp_after = r.prior_false_positives - r.fixed_false_positives;
    let broken_note = format!(
        "{} of {} previously correct decisions were newly broken",
        r.newly_broken, r.prior_correct
    );

    let mut out = format!("{heading} Posterior correction\n\n");
    out.push_str(&format!(
        "Config hash `{}`, seed {}, tool version {}.\n\n",
        artifact.meta.config_hash, artifact.meta.seed, artifact.meta.tool_version
    ));
    out.push_str(&format!(
        "Scenario: {}.\n\n",
        artifact.scenario.as_deref().unwrap_or("all test windows")
    ));
    out.push_str(&format!(
        "Decisions score windows against threshold {:.4} (Youden point on \
         training windows). Decisions within +/-{} of the threshold consult \
         the belief network and flip when the jamming posterior clears 0.5 \
         by more than {}.\n\n",
        r.threshold, r.params.band, r.params.delta
    ));
    out.push_str(&format!(
        "Windows: {}; consulted: {}; skipped (posterior unavailable): {}; flips: {}.\n\n",
        r.n_windows, r.consulted, r.skipped_missing, r.flips
    ));

    out.push_str("| Metric | Before | After |\n|---|---:|---:|\n");
    out.push_str(&format!(
        "| Accuracy | {:.4} | {:.4} |\n",
        r.accuracy_before, r.accuracy_after
    ));
    out.push_str(&format!(
        "| False negatives | {} | {} |\n",
        r.prior_false_negatives,
        fn_after + newly_broken_fn(artifact)
    ));
    out.push_str(&format!(
        "| False positives | {} | {} |\n\n",
        r.prior_false_positives,
        fp_after + newly_broken_fp(artifact)
    ));

    let combined = match r.combined_fixed_fraction {
        Some(f) => format!("; overall {:.1}% of the prior errors were fixed", f * 100.0),
        None => String::new(),
    };
    out.push_str(&format!(
        "Fixed {} of {} false negatives{} and {} of {} false positives{}{}. {}.\n\n",
        r.fixed_false_negatives,
        r.prior_false_negatives,
        fraction_note(r.fn_fixed_fraction),
        r.fixed_false_positives,
        r.prior_false_positives,
        fraction_note(r.fp_fixed_fraction),
        combined,
        broken_note
    ));

    out.push_str(&format!("{heading}# Error clusters\n\n"));
    out.push_str(
        "Mean KPI evidence per confusion quadrant of the original decisions, \
         the mean posterior over that quadrant's windows, and the posterior \
         the belief network assigns to the quadrant's mean evidence.\n\n",
    );
    out.push_str(
        "| Quadrant | Count | PUSCH SNR (dB) | CQI | DL MCS | UL MCS | \
         Mean posterior | Posterior at means |\n\
         |---|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    let quadrants: [(&str, Option<&QuadrantKpiSummary>, Option<f64>, Option<f64>); 4] = [
        (
            "True positive",
            artifact.clusters.true_positive.as_ref(),
            r.mean_posterior.true_positive,
            artifact.posterior_at_cluster_means.true_positive,
        ),
        (
            "False positive",
            artifact.clusters.false_positive.as_ref(),
            r.mean_posterior.false_positive,
            artifact.posterior_at_cluster_means.false_positive,
        ),
        (
            "True negative",
            artifact.clusters.true_negative.as_ref(),
            r.mean_posterior.true_negative,
            artifact.posterior_at_cluster_means.true_negative,
        ),
        (
            "False negative",
            artifact.clusters.false_negative.as_ref(),
            r.mean_posterior.false_negative,
            artifact.posterior_at_cluster_means.false_negative,
        ),
    ];
    for (name, cluster, mean_posterior, at_means) in quadrants {
        match cluster {
            Some(c) => out.push_str(&format!(
                "| {name} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} | {} |\n",
                c.count,
                c.mean_pusch_snr_db,
                c.mean_cqi,
                c.mean_dl_mcs,
                c.mean_ul_mcs,
                optional(mean_posterior),
                optional(at_means)
            )),
            None => out.push_str(&format!("| {name} | 0 | - | - | - | - | - | - |\n")),
        }
    }
    out
}

fn optional(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

fn fraction_note(f: Option<f64>) -> String {
    match f {
        Some(f) => format!(" ({:.1}%)", f * 100.0),
        None => String::new(),
    }
}

/// Newly broken decisions that became false negatives (true label positive).
fn newly_broken_fn(artifact: &CorrectionArtifact) -> usize {
    artifact
        .report
        .audit
        .iter()
        .filter(|a| a.original == a.label && a.label)
        .count()
}

/// Newly broken decisions that became false positives (true label negative).
fn newly_broken_fp(artifact: &CorrectionArtifact) -> usize {
    artifact
        .report
        .audit
        .iter()
        .filter(|a| a.original == a.label && !a.label)
        .count()
}
