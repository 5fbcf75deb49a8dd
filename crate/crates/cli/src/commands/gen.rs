//! `gen`: synthesize the labeled cross-layer KPI dataset.

use anyhow::{Context, Result};

use jamguard_core::datagen::{generate_dataset, write_dataset_csv};
use jamguard_core::kpi::MappingTables;

use crate::artifact::{write_json, ArtifactMeta};
use crate::config::PipelineConfig;
use crate::pipeline::{DatasetMeta, Workspace};

pub fn run(config: &PipelineConfig, ws: &Workspace) -> Result<()> {
    let scenarios = config.scenarios();
    let tables = MappingTables::standard();
    let dataset = generate_dataset(&config.generator, &scenarios, &tables)
        .context("generating dataset")?;

    let csv_path = ws.dataset_csv();
    if let Some(parent) = csv_path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    write_dataset_csv(&dataset, &csv_path)
        .with_context(|| format!("writing {}", csv_path.display()))?;

    let positives = dataset.rows.iter().filter(|r| r.label).count();
    let meta = DatasetMeta {
        meta: ArtifactMeta::for_config(config),
        rows: dataset.rows.len(),
        positives,
        scenarios: scenarios.iter().map(|s| s.id.clone()).collect(),
        samples_per_scenario: config.generator.samples_per_scenario,
        strongest_scenario: config
            .generator
            .strongest_scenario_id()
            .unwrap_or_default()
            .to_string(),
        hardest_scenario: config
            .generator
            .hardest_scenario_id()
            .unwrap_or_default()
            .to_string(),
    };
    write_json(&ws.dataset_meta(), &meta)?;

    println!(
        "gen: {} rows ({} jammed, {} clean) across {} scenarios -> {}",
        meta.rows,
        positives,
        meta.rows - positives,
        meta.scenarios.len(),
        csv_path.display()
    );
    Ok(())
}
