//! `bench`: wall-clock training and inference runtimes per model.

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use jamguard_core::datagen::SAMPLE_PERIOD_MS;
use jamguard_core::detect::{Detector, TrainedDetector};
use jamguard_core::esn::EsnModel;
use jamguard_core::eval::{runtime_table_markdown, time_stats, RuntimeRow, DEFAULT_TIMING_REPS};

use crate::artifact::{write_json, write_text, ArtifactMeta};
use crate::config::PipelineConfig;
use crate::pipeline::{
    esn_training_rows, features_and_labels, load_data, load_detector, load_esn, windows_for,
    Workspace,
};

/// Stored runtime comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchArtifact {
    pub meta: ArtifactMeta,
    /// Collection period the per-window inference budget comes from.
    pub sample_period_ms: u64,
    pub rows: Vec<RuntimeRow>,
}

pub fn run(config: &PipelineConfig, ws: &Workspace) -> Result<()> {
    let meta = ArtifactMeta::for_config(config);
    let data = load_data(ws, &meta)?;
    let train_rows = data.assignments.train();
    let (x_train, y_train) = features_and_labels(&data.dataset, &train_rows, &data.stats)?;
    let (x_test, _) = features_and_labels(&data.dataset, &data.assignments.test, &data.stats)?;

    let mut rows: Vec<RuntimeRow> = Vec::new();
    for name in &config.models {
        let detector = load_detector(ws, &meta, name)?;
        let fit = time_stats(3, || {
            let mut fresh = TrainedDetector::from_name(name, config.seed).expect("known name");
            fresh.fit(&x_train, &y_train).expect("fit succeeds");
        })
        .with_context(|| format!("timing {name} training"))?;
        let score = time_stats(DEFAULT_TIMING_REPS, || {
            for row in &x_test {
                detector.score(row).expect("score succeeds");
            }
        })
        .with_context(|| format!("timing {name} inference"))?;
        let row = RuntimeRow {
            model: name.clone(),
            train_ms: fit.median_ms(),
            inference_us_per_window: score.median_us / x_test.len() as f64,
        };
        println!(
            "bench: {name}: training {:.1} ms, inference {:.1} us per sample",
            row.train_ms, row.inference_us_per_window
        );
        rows.push(row);
    }

    let esn = load_esn(ws, &meta)?;
    let fit_rows = esn_training_rows(&train_rows, config.esn_train_fraction);
    let fit_windows = windows_for(&data.dataset, &fit_rows, config.esn.window_len, &data.stats)?;
    let test_windows = windows_for(
        &data.dataset,
        &data.assignments.test,
        config.esn.window_len,
        &data.stats,
    )?;
    let fit = time_stats(3, || {
        let mut fresh = EsnModel::new(config.esn).expect("valid params");
        fresh
            .fit_readout(&fit_windows.windows, &fit_windows.labels)
            .expect("fit succeeds");
    })
    .context("timing esn training")?;
    let score = time_stats(DEFAULT_TIMING_REPS, || {
        for w in &test_windows.windows {
            esn.score(w).expect("score succeeds");
        }
    })
    .context("timing esn inference")?;
    let row = RuntimeRow {
        model: "esn".to_string(),
        train_ms: fit.median_ms(),
        inference_us_per_window: score.median_us / test_windows.len() as f64,
    };
    println!(
        "bench: esn: training {:.1} ms, inference {:.1} us per window",
        row.train_ms, row.inference_us_per_window
    );
    rows.push(row);

    let artifact = BenchArtifact {
        meta,
        sample_period_ms: SAMPLE_PERIOD_MS,
        rows,
    };
    write_json(&ws.bench_json(), &artifact)?;
    write_text(&ws.bench_md(), &bench_markdown(&artifact, "#"))?;
    println!("bench: wrote {}", ws.bench_md().display());
    Ok(())
}

/// Renders the runtime table; `heading` is `#` standalone, `##` embedded.
pub fn bench_markdown(artifact: &BenchArtifact, heading: &str) -> String {
    let mut out = format!("{heading} Runtime comparison\n\n");
    out.push_str(&format!(
        "Config hash `{}`, seed {}, tool version {}. Medians over repeated \
         wall-clock runs; inference must stay below the {} ms sample period \
         for on-line use.\n\n",
        artifact.meta.config_hash,
        artifact.meta.seed,
        artifact.meta.tool_version,
        artifact.sample_period_ms
    ));
    out.push_str(&runtime_table_markdown(&artifact.rows));
    out
}
