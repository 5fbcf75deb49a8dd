//! `train`: fit every configured detector plus the echo state network.

use anyhow::{Context, Result};

use jamguard_core::detect::Detector;
use jamguard_core::esn::EsnModel;

use crate::artifact::{write_json, ArtifactMeta};
use crate::config::PipelineConfig;
use crate::pipeline::{
    compute_split, esn_training_rows, features_and_labels, fit_detector, fold_stats,
    load_dataset, windows_for, DetectorArtifact, EsnMeta, NormalizationArtifact, SplitArtifact,
    Workspace,
};

pub fn run(config: &PipelineConfig, ws: &Workspace) -> Result<()> {
    let meta = ArtifactMeta::for_config(config);
    let dataset = load_dataset(ws, &meta)?;

    let assignments = compute_split(&dataset, config)?;
    write_json(
        &ws.split(),
        &SplitArtifact {
            meta: meta.clone(),
            test: assignments.test.clone(),
            folds: assignments.folds.clone(),
        },
    )?;
    let train_rows = assignments.train();
    println!(
        "train: {} training rows, {} test rows, {} folds",
        train_rows.len(),
        assignments.test.len(),
        assignments.folds.len()
    );

    let stats = fold_stats(&dataset, &train_rows).context("computing normalization stats")?;
    write_json(
        &ws.normalization(),
        &NormalizationArtifact {
            meta: meta.clone(),
            stats: stats.clone(),
        },
    )?;

    let (x, y) = features_and_labels(&dataset, &train_rows, &stats)?;
    for name in &config.models {
        let detector = fit_detector(name, config.seed, &x, &y)
            .with_context(|| format!("fitting {name}"))?;
        let params = detector.trainable_parameters();
        write_json(
            &ws.detector_model(name),
            &DetectorArtifact {
                meta: meta.clone(),
                trainable_parameters: params,
                detector,
            },
        )?;
        println!("train: {name} fitted ({params} trainable parameters)");
    }

    let esn_rows = esn_training_rows(&train_rows, config.esn_train_fraction);
    let windows = windows_for(&dataset, &esn_rows, config.esn.window_len, &stats)
        .context("cutting training windows")?;
    let mut esn = EsnModel::new(config.esn)?;
    esn.fit_readout(&windows.windows, &windows.labels)
        .context("fitting the echo state network readout")?;
    if let Some(parent) = ws.esn_bin().parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    esn.save(&ws.esn_bin())
        .with_context(|| format!("writing {}", ws.esn_bin().display()))?;
    write_json(
        &ws.esn_meta(),
        &EsnMeta {
            meta,
            trainable_parameters: esn.trainable_parameters(),
            reservoir_resample_attempts: esn.resample_attempts,
            training_windows: windows.len(),
            train_fraction: config.esn_train_fraction,
        },
    )?;
    println!(
        "train: esn fitted on {} windows from {:.0}% of the training rows \
         ({} trainable parameters)",
        windows.len(),
        config.esn_train_fraction * 100.0,
        esn.trainable_parameters()
    );
    Ok(())
}
