//! `report`: collate every artifact into one Markdown summary.

use std::path::PathBuf;

use anyhow::{Context, Result};

use jamguard_core::eval::ModelEvalReport;

use crate::artifact::{read_json, write_text, ArtifactMeta};
use crate::commands::bench::{bench_markdown, BenchArtifact};
use crate::commands::correct::{correction_markdown, CorrectionArtifact};
use crate::commands::eval::{model_table, scenario_table};
use crate::config::PipelineConfig;
use crate::pipeline::{BnmArtifact, DatasetMeta, Workspace};

pub fn run(config: &PipelineConfig, ws: &Workspace, force: bool) -> Result<()> {
    let dataset_path = ws.dataset_meta();
    let dataset: DatasetMeta = read_json(&dataset_path)?;
    let mut sources: Vec<(PathBuf, ArtifactMeta)> =
        vec![(dataset_path, dataset.meta.clone())];

    let mut model_names: Vec<String> = config.models.clone();
    model_names.push("esn".to_string());
    let mut evals: Vec<ModelEvalReport> = Vec::new();
    for name in &model_names {
        let path = ws.eval_report(name);
        if !path.exists() {
            continue;
        }
        let report: ModelEvalReport = read_json(&path)?;
        sources.push((
            path,
            ArtifactMeta {
                tool_version: report.tool_version.clone(),
                config_hash: report.config_hash.clone(),
                seed: report.seed,
            },
        ));
        evals.push(report);
    }

    let bnm: Option<BnmArtifact> = optional(ws.bnm_model(), &mut sources)?;
    let correction: Option<CorrectionArtifact> = optional(ws.correction_json(), &mut sources)?;
    let bench: Option<BenchArtifact> = optional(ws.bench_json(), &mut sources)?;

    let reference = &sources[0].1;
    let mixed: Vec<String> = sources
        .iter()
        .filter(|(_, meta)| {
            meta.config_hash != reference.config_hash || meta.seed != reference.seed
        })
        .map(|(path, meta)| {
            format!(
                "{} (hash {}, seed {})",
                path.display(),
                meta.config_hash,
                meta.seed
            )
        })
        .collect();
    if !mixed.is_empty() {
        if force {
            log::warn!(
                "mixing artifacts from different configurations: {}",
                mixed.join("; ")
            );
        } else {
            anyhow::bail!(
                "artifacts come from different configurations than {} (hash {}, seed {}): {}; \
                 rerun the pipeline or pass --force",
                sources[0].0.display(),
                reference.config_hash,
                reference.seed,
                mixed.join("; ")
            );
        }
    }

    let markdown = render(&dataset, &evals, bnm.as_ref(), correction.as_ref(), bench.as_ref())
        .context("rendering report")?;
    write_text(&ws.report_md(), &markdown)?;
    println!("report: wrote {}", ws.report_md().display());
    Ok(())
}

/// Reads an artifact when present, recording its provenance.
fn optional<T: serde::de::DeserializeOwned + HasMeta>(
    path: PathBuf,
    sources: &mut Vec<(PathBuf, ArtifactMeta)>,
) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let artifact: T = read_json(&path)?;
    sources.push((path, artifact.meta().clone()));
    Ok(Some(artifact))
}

trait HasMeta {
    fn meta(&self) -> &ArtifactMeta;
}

impl HasMeta for BnmArtifact {
    fn meta(&self) -> &ArtifactMeta {
        &self.meta
    }
}

impl HasMeta for CorrectionArtifact {
    fn meta(&self) -> &ArtifactMeta {
        &self.meta
    }
}

impl HasMeta for BenchArtifact {
    fn meta(&self) -> &ArtifactMeta {
        &self.meta
    }
}

fn render(
    dataset: &DatasetMeta,
    evals: &[ModelEvalReport],
    bnm: Option<&BnmArtifact>,
    correction: Option<&CorrectionArtifact>,
    bench: Option<&BenchArtifact>,
) -> Result<String> {
    let meta = &dataset.meta;
    let mut out = String::from("# Pipeline report\n\n");
    out.push_str(&format!(
        "Config hash `{}`, seed {}, tool version {}.\n\n",
        meta.config_hash, meta.seed, meta.tool_version
    ));

    out.push_str("## Dataset\n\n");
    out.push_str(&format!(
        "{} rows ({} jammed, {} clean) across {} interference scenarios, \
         {} sample pairs per scenario. The strongest scenario is `{}`; the \
         weakest (hardest to detect) is `{}`.\n\n",
        dataset.rows,
        dataset.positives,
        dataset.rows - dataset.positives,
        dataset.scenarios.len(),
        dataset.samples_per_scenario,
        dataset.strongest_scenario,
        dataset.hardest_scenario
    ));

    if !evals.is_empty() {
        out.push_str("## Detection performance\n\n");
        out.push_str(&model_table(evals));
        let scenarios = scenario_table(evals);
        if !scenarios.is_empty() {
            out.push_str("\n### Per-scenario test AUC\n\n");
            out.push_str(&scenarios);
        }
        out.push('\n');
    }

    if let Some(bnm) = bnm {
        out.push_str("## Belief network\n\n");
        out.push_str(&format!(
            "Fitted on {} training rows; {:.2}% of evidence values were \
             clamped into boundary bins. Prior marginals:\n\n",
            bnm.model.rows_used,
            bnm.model.clamped_fraction * 100.0
        ));
        out.push_str("```\n");
        out.push_str(&bnm.model.marginal_summary()?);
        out.push_str("```\n\n");
    }

    if let Some(correction) = correction {
        out.push_str(&correction_markdown(correction, "##"));
        out.push('\n');
    }

    if let Some(bench) = bench {
        out.push_str(&bench_markdown(bench, "##"));
    }
    Ok(out)
}
