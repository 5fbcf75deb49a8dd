//! Artifact provenance and JSON file plumbing shared by all commands.
//!
//! Every artifact a command writes embeds an [`ArtifactMeta`] so downstream
//! commands (and the final report) can verify that all inputs came from the
//! same configuration and seed.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

/// Provenance stamp carried by every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn for_config(config: &PipelineConfig) -> Self {
        ArtifactMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            seed: config.seed,
        }
    }

    /// Errors when the artifact at `source` was produced under a different
    /// configuration than the current one.
    pub fn check_matches(&self, expected: &ArtifactMeta, source: &Path) -> Result<()> {
        if self.config_hash != expected.config_hash || self.seed != expected.seed {
            anyhow::bail!(
                "{} was produced with config hash {} (seed {}), current config hashes to {} \
                 (seed {}); regenerate the artifact or pass the matching config",
                source.display(),
                self.config_hash,
                self.seed,
                expected.config_hash,
                expected.seed,
            );
        }
        Ok(())
    }
}

/// Reads a JSON artifact, failing with the file name when it is missing.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        anyhow::bail!("missing artifact: {}", path.display());
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes a value as pretty-printed JSON, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value).context("serializing artifact")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes plain text, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Requires that a non-JSON artifact (CSV, binary model) exists.
pub fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        anyhow::bail!("missing artifact: {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Payload {
        meta: ArtifactMeta,
        value: u32,
    }

    fn meta(hash: &str, seed: u64) -> ArtifactMeta {
        ArtifactMeta {
            tool_version: "0.1.0".into(),
            config_hash: hash.into(),
            seed,
        }
    }

    #[test]
    fn test_round_trip_and_missing_file_message() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/artifact.json");
        let payload = Payload {
            meta: meta("abc", 42),
            value: 7,
        };
        write_json(&path, &payload).unwrap();
        let back: Payload = read_json(&path).unwrap();
        assert_eq!(back, payload);

        let missing = dir.path().join("nope.json");
        let err = read_json::<Payload>(&missing).unwrap_err().to_string();
        assert!(err.contains("missing artifact"), "{err}");
        assert!(err.contains("nope.json"), "{err}");
    }

    #[test]
    fn test_meta_mismatch_names_the_file() {
        let current = meta("aaa", 1);
        let stored = meta("bbb", 1);
        let err = stored
            .check_matches(&current, Path::new("out/eval/forest.eval.json"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("forest.eval.json"), "{err}");
        assert!(err.contains("bbb") && err.contains("aaa"), "{err}");
        assert!(stored.check_matches(&stored, Path::new("x")).is_ok());
    }
}
