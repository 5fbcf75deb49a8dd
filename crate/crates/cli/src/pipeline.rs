//! Shared pipeline steps and the on-disk artifact layout.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use jamguard_core::bayes::KpiBayesModel;
use jamguard_core::datagen::{
    compute_feature_stats, normalize_features, read_dataset_csv, FeatureStats, LabeledDataset,
};
use jamguard_core::detect::{Detector, TrainedDetector};
use jamguard_core::esn::{extract_windows, EsnModel, WindowSet};
use jamguard_core::eval::{split_and_cv, SplitAssignments};

use crate::artifact::{read_json, require_file, ArtifactMeta};
use crate::config::PipelineConfig;

/// Artifact paths under one output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new<P: AsRef<Path>>(root: P) -> Self {
        Workspace {
            root: root.as_ref().to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_csv(&self) -> PathBuf {
        self.root.join("dataset.csv")
    }

    pub fn dataset_meta(&self) -> PathBuf {
        self.root.join("dataset.meta.json")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("split.json")
    }

    pub fn normalization(&self) -> PathBuf {
        self.root.join("models/normalization.json")
    }

    pub fn detector_model(&self, name: &str) -> PathBuf {
        self.root.join(format!("models/{name}.json"))
    }

    pub fn esn_bin(&self) -> PathBuf {
        self.root.join("models/esn.bin")
    }

    pub fn esn_meta(&self) -> PathBuf {
        self.root.join("models/esn.meta.json")
    }

    pub fn eval_report(&self, model: &str) -> PathBuf {
        self.root.join(format!("eval/{model}.eval.json"))
    }

    pub fn roc_csv(&self, model: &str) -> PathBuf {
        self.root.join(format!("eval/{model}.roc.csv"))
    }

    pub fn roc_svg(&self) -> PathBuf {
        self.root.join("eval/roc.svg")
    }

    pub fn eval_summary(&self) -> PathBuf {
        self.root.join("eval/summary.md")
    }

    pub fn bnm_model(&self) -> PathBuf {
        self.root.join("bnm/model.json")
    }

    pub fn bnm_posterior(&self) -> PathBuf {
        self.root.join("bnm/posterior.json")
    }

    pub fn correction_json(&self) -> PathBuf {
        self.root.join("correct/correction.json")
    }

    pub fn correction_md(&self) -> PathBuf {
        self.root.join("correct/correction.md")
    }

    pub fn bench_json(&self) -> PathBuf {
        self.root.join("bench.json")
    }

    pub fn bench_md(&self) -> PathBuf {
        self.root.join("bench.md")
    }

    pub fn report_md(&self) -> PathBuf {
        self.root.join("report.md")
    }
}

/// Sidecar describing the generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub meta: ArtifactMeta,
    pub rows: usize,
    pub positives: usize,
    pub scenarios: Vec<String>,
    pub samples_per_scenario: usize,
    pub strongest_scenario: String,
    pub hardest_scenario: String,
}

/// Persisted train/test split and cross-validation folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitArtifact {
    pub meta: ArtifactMeta,
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

impl SplitArtifact {
    pub fn assignments(&self) -> SplitAssignments {
        SplitAssignments {
            test: self.test.clone(),
            folds: self.folds.clone(),
        }
    }
}

/// Persisted z-normalization statistics, computed on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationArtifact {
    pub meta: ArtifactMeta,
    pub stats: FeatureStats,
}

/// One serialized instantaneous detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorArtifact {
    pub meta: ArtifactMeta,
    pub trainable_parameters: usize,
    pub detector: TrainedDetector,
}

/// Provenance sidecar for the binary ESN artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnMeta {
    pub meta: ArtifactMeta,
    pub trainable_parameters: usize,
    pub reservoir_resample_attempts: u32,
    pub training_windows: usize,
    /// Fraction of the training rows the readout was fitted on.
    pub train_fraction: f64,
}

/// Persisted belief network fitted over the KPI evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnmArtifact {
    pub meta: ArtifactMeta,
    pub model: KpiBayesModel,
}

/// Dataset plus the split and normalization artifacts that interpret it.
pub struct LoadedData {
    pub dataset: LabeledDataset,
    pub assignments: SplitAssignments,
    pub stats: FeatureStats,
}

/// Loads the dataset produced by `gen`, checking provenance.
pub fn load_dataset(ws: &Workspace, expected: &ArtifactMeta) -> Result<LabeledDataset> {
    let meta_path = ws.dataset_meta();
    let meta: DatasetMeta = read_json(&meta_path)?;
    meta.meta.check_matches(expected, &meta_path)?;
    let csv_path = ws.dataset_csv();
    require_file(&csv_path)?;
    let dataset = read_dataset_csv(&csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    if dataset.rows.len() != meta.rows {
        anyhow::bail!(
            "{} holds {} rows but {} recorded {}",
            csv_path.display(),
            dataset.rows.len(),
            meta_path.display(),
            meta.rows
        );
    }
    Ok(dataset)
}

/// Loads dataset, split, and normalization stats together (post-`train`).
pub fn load_data(ws: &Workspace, expected: &ArtifactMeta) -> Result<LoadedData> {
    let dataset = load_dataset(ws, expected)?;
    let split_path = ws.split();
    let split: SplitArtifact = read_json(&split_path)?;
    split.meta.check_matches(expected, &split_path)?;
    let norm_path = ws.normalization();
    let norm: NormalizationArtifact = read_json(&norm_path)?;
    norm.meta.check_matches(expected, &norm_path)?;
    Ok(LoadedData {
        dataset,
        assignments: split.assignments(),
        stats: norm.stats,
    })
}

/// Computes the stratified split for a dataset from the config.
pub fn compute_split(
    dataset: &LabeledDataset,
    config: &PipelineConfig,
) -> Result<SplitAssignments> {
    Ok(split_and_cv(dataset, &config.split)?)
}

/// Normalized feature matrix and labels for the given rows.
pub fn features_and_labels(
    dataset: &LabeledDataset,
    rows: &[usize],
    stats: &FeatureStats,
) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let x = normalize_features(dataset, rows, stats)?;
    let y = rows.iter().map(|&i| dataset.rows[i].label).collect();
    Ok((x, y))
}

/// Fits one named detector on normalized training rows.
pub fn fit_detector(
    name: &str,
    seed: u64,
    x: &[Vec<f64>],
    y: &[bool],
) -> Result<TrainedDetector> {
    let mut detector = TrainedDetector::from_name(name, seed)?;
    detector.as_detector_mut().fit(x, y)?;
    Ok(detector)
}

/// Scores every row with a fitted detector.
pub fn score_rows(detector: &dyn Detector, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    x.iter().map(|row| Ok(detector.score(row)?)).collect()
}

/// Cuts normalized windows for the given rows using stored statistics.
pub fn windows_for(
    dataset: &LabeledDataset,
    rows: &[usize],
    window_len: usize,
    stats: &FeatureStats,
) -> Result<WindowSet> {
    Ok(extract_windows(dataset, rows, window_len, Some(stats))?)
}

/// Scores every window of a set with the ESN.
pub fn score_windows(esn: &EsnModel, windows: &WindowSet) -> Result<Vec<f64>> {
    windows
        .windows
        .iter()
        .map(|w| Ok(esn.score(w)?))
        .collect()
}

/// The prefix of `rows` the weakened ESN trains on (fraction of the full
/// training portion, earliest rows first, at least one row).
pub fn esn_training_rows(rows: &[usize], fraction: f64) -> Vec<usize> {
    let keep = ((rows.len() as f64 * fraction).round() as usize)
        .clamp(1, rows.len());
    rows[..keep].to_vec()
}

/// Loads the fitted ESN and its provenance sidecar.
pub fn load_esn(ws: &Workspace, expected: &ArtifactMeta) -> Result<EsnModel> {
    let meta_path = ws.esn_meta();
    let esn_meta: EsnMeta = read_json(&meta_path)?;
    esn_meta.meta.check_matches(expected, &meta_path)?;
    let bin_path = ws.esn_bin();
    require_file(&bin_path)?;
    let esn =
        EsnModel::load(&bin_path).with_context(|| format!("reading {}", bin_path.display()))?;
    Ok(esn)
}

/// Loads the fitted belief network.
pub fn load_bnm(ws: &Workspace, expected: &ArtifactMeta) -> Result<KpiBayesModel> {
    let path = ws.bnm_model();
    let artifact: BnmArtifact = read_json(&path)?;
    artifact.meta.check_matches(expected, &path)?;
    Ok(artifact.model)
}

/// Loads one serialized detector by name.
pub fn load_detector(
    ws: &Workspace,
    expected: &ArtifactMeta,
    name: &str,
) -> Result<TrainedDetector> {
    let path = ws.detector_model(name);
    let artifact: DetectorArtifact = read_json(&path)?;
    artifact.meta.check_matches(expected, &path)?;
    Ok(artifact.detector)
}

/// Recomputes per-fold normalization and feature stats lazily for CV.
pub fn fold_stats(dataset: &LabeledDataset, rows: &[usize]) -> Result<FeatureStats> {
    Ok(compute_feature_stats(dataset, rows)?)
}
