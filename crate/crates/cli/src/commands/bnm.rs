//! `bnm`: fit the KPI belief network and answer posterior queries.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use jamguard_core::bayes::{
    fit_kpi_model, KpiBayesModel, NODE_CQI, NODE_DL_MCS, NODE_SNR, NODE_UL_MCS,
};

use crate::artifact::{read_json, write_json, ArtifactMeta};
use crate::config::PipelineConfig;
use crate::pipeline::{load_data, BnmArtifact, Workspace};

/// Evidence query file: every field optional, unobserved nodes stay free.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceQuery {
    /// PUSCH SNR in dB.
    pub snr: Option<f64>,
    pub cqi: Option<f64>,
    pub dl_mcs: Option<f64>,
    pub ul_mcs: Option<f64>,
}

/// Saved answer to one posterior query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorArtifact {
    pub meta: ArtifactMeta,
    pub query: EvidenceQuery,
    /// Discretized evidence states actually applied.
    pub evidence: BTreeMap<String, String>,
    /// Count of evidence values clamped into a boundary bin.
    pub clamped: usize,
    pub posterior_jamming: f64,
}

pub fn run(config: &PipelineConfig, ws: &Workspace, evidence: Option<&Path>) -> Result<()> {
    let meta = ArtifactMeta::for_config(config);
    let data = load_data(ws, &meta)?;
    let train_rows = data.assignments.train();
    let model = fit_kpi_model(&data.dataset, &train_rows, &config.bnm)
        .context("fitting the belief network")?;
    write_json(
        &ws.bnm_model(),
        &BnmArtifact {
            meta: meta.clone(),
            model: model.clone(),
        },
    )?;
    println!(
        "bnm: fitted on {} rows ({:.2}% of evidence values clamped into boundary bins)",
        model.rows_used,
        model.clamped_fraction * 100.0
    );
    println!("bnm: prior marginals with no evidence applied:");
    print!("{}", model.marginal_summary()?);

    if let Some(path) = evidence {
        let query: EvidenceQuery = read_json(path)?;
        let (evidence_map, clamped) = discretize_query(&model, &query)
            .with_context(|| format!("discretizing evidence from {}", path.display()))?;
        if evidence_map.is_empty() {
            anyhow::bail!(
                "{} sets no evidence fields (expected any of snr, cqi, dl_mcs, ul_mcs)",
                path.display()
            );
        }
        let posterior = model.posterior_jamming(&evidence_map)?;
        let states: Vec<String> = evidence_map
            .iter()
            .map(|(node, state)| format!("{node}={state}"))
            .collect();
        println!("bnm: evidence {}", states.join(", "));
        println!("bnm: Pr(jamming = present | evidence) = {posterior:.4}");
        write_json(
            &ws.bnm_posterior(),
            &PosteriorArtifact {
                meta,
                query,
                evidence: evidence_map,
                clamped,
                posterior_jamming: posterior,
            },
        )?;
    }
    Ok(())
}

/// Maps raw query values onto evidence states.
///
/// CQI and MCS indices are integers on the air interface, so fractional
/// query values (for example averages over many samples) are rounded to the
/// nearest index before binning; SNR is binned as-is. Out-of-range values
/// clamp into the boundary bins, mirroring how the network was fitted.
pub fn discretize_query(
    model: &KpiBayesModel,
    query: &EvidenceQuery,
) -> Result<(BTreeMap<String, String>, usize)> {
    let config = model.config();
    let snr_d = config.snr_discretizer()?;
    let cqi_d = config.cqi_discretizer()?;
    let mcs_d = config.mcs_discretizer()?;

    let mut evidence = BTreeMap::new();
    let mut clamped = 0;
    let mut apply = |node: &str,
                     value: Option<f64>,
                     discretizer: &jamguard_core::bayes::Discretizer,
                     round: bool|
     -> Result<()> {
        let Some(raw) = value else { return Ok(()) };
        let v = if round { raw.round() } else { raw };
        let (bin, was_clamped) = discretizer.bin(v)?;
        clamped += usize::from(was_clamped);
        evidence.insert(node.to_string(), discretizer.labels()[bin].clone());
        Ok(())
    };
    apply(NODE_SNR, query.snr, &snr_d, false)?;
    apply(NODE_CQI, query.cqi, &cqi_d, true)?;
    apply(NODE_DL_MCS, query.dl_mcs, &mcs_d, true)?;
    apply(NODE_UL_MCS, query.ul_mcs, &mcs_d, true)?;
    Ok((evidence, clamped))
}
