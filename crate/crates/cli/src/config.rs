//! Pipeline configuration: one JSON document drives every command, and its
//! hash ties all artifacts of a run together.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jamguard_core::bayes::BnmConfig;
use jamguard_core::correction::CorrectionParams;
use jamguard_core::datagen::GeneratorConfig;
use jamguard_core::detect::DETECTOR_NAMES;
use jamguard_core::esn::EsnParams;
use jamguard_core::eval::SplitConfig;
use jamguard_core::JammingScenario;

/// Everything a pipeline run needs, with working defaults.
///
/// The seed recorded here is the single source of randomness: the generator,
/// the split shuffle, and every model that draws random numbers derive their
/// streams from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Detectors to train and evaluate, by name.
    pub models: Vec<String>,
    pub generator: GeneratorConfig,
    pub split: SplitConfig,
    pub esn: EsnParams,
    /// Fraction of the training rows the ESN readout is fitted on, newest
    /// last; < 1 deliberately weakens the sequential detector.
    pub esn_train_fraction: f64,
    pub bnm: BnmConfig,
    pub correction: CorrectionParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let seed = 42;
        PipelineConfig {
            seed,
            models: DETECTOR_NAMES.iter().map(|s| s.to_string()).collect(),
            generator: GeneratorConfig::default(),
            split: SplitConfig::default(),
            esn: EsnParams::default(),
            esn_train_fraction: 1.0,
            bnm: BnmConfig::default(),
            correction: CorrectionParams::default(),
        }
    }
}

impl PipelineConfig {
    /// Loads a config file, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    /// Propagates the top-level seed into every seeded sub-config, then
    /// validates. Call after any command-line override.
    pub fn finalize(&mut self, seed_override: Option<u64>) -> Result<()> {
        if let Some(seed) = seed_override {
            self.seed = seed;
        }
        self.generator.seed = self.seed;
        self.split.seed = self.seed;
        self.esn.seed = self.seed;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            anyhow::bail!("config field models: at least one detector is required");
        }
        for name in &self.models {
            if !DETECTOR_NAMES.contains(&name.as_str()) {
                anyhow::bail!(
                    "config field models: unknown detector '{name}' (available: {})",
                    DETECTOR_NAMES.join(", ")
                );
            }
        }
        if !(self.esn_train_fraction > 0.0 && self.esn_train_fraction <= 1.0) {
            anyhow::bail!(
                "config field esn_train_fraction: must be in (0, 1], got {}",
                self.esn_train_fraction
            );
        }
        self.generator
            .validate()
            .context("config field generator")?;
        self.esn.validate().context("config field esn")?;
        self.bnm.validate().context("config field bnm")?;
        self.correction.validate().context("config field correction")?;
        Ok(())
    }

    /// The scenarios this pipeline generates and evaluates.
    pub fn scenarios(&self) -> Vec<JammingScenario> {
        JammingScenario::table_defaults()
    }

    /// Hex digest of the canonical JSON serialization, truncated to twelve
    /// characters; identical configs (after overrides) hash identically.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest
            .iter()
            .take(6)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
