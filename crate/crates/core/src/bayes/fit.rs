//! Fitting the KPI belief network from labeled rows and querying it for
//! jamming posteriors.
//!
//! Conditional probability tables are estimated by additive-smoothed
//! counting over discretized KPI values: every CPT cell starts at
//! `laplace_alpha` pseudo-counts, so parent configurations never seen in
//! training still yield a proper distribution instead of a zero row.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bayes::discretize::Discretizer;
use crate::bayes::infer::{posterior, Posterior};
use crate::bayes::net::{BayesNode, DiscreteBayesNet};
use crate::bayes::rules::{
    domain_structure, BnmConfig, JAMMING_STATES, NODE_CQI, NODE_DL_MCS, NODE_JAMMING, NODE_SNR,
    NODE_UL_MCS,
};
use crate::datagen::{LabeledDataset, LabeledRow};
use crate::error::{Error, Result};
use crate::kpi::KpiSample;

/// A fitted belief network over one cell's KPI evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct KpiBayesModel {
    net: DiscreteBayesNet,
    config: BnmConfig,
    /// Rows the CPT counts came from.
    pub rows_used: usize,
    /// Fraction of discretized values that fell outside the configured bin
    /// ranges during fitting (clamped into the nearest bin).
    pub clamped_fraction: f64,
}

/// Raw serde image; conversion re-checks that the stored network matches
/// the structure the stored configuration implies.
#[derive(Serialize, Deserialize)]
struct ModelData {
    net: DiscreteBayesNet,
    config: BnmConfig,
    rows_used: usize,
    clamped_fraction: f64,
}

impl TryFrom<ModelData> for KpiBayesModel {
    type Error = Error;
    fn try_from(data: ModelData) -> Result<Self> {
        validate_structure(&data.net, &data.config)?;
        Ok(KpiBayesModel {
            net: data.net,
            config: data.config,
            rows_used: data.rows_used,
            clamped_fraction: data.clamped_fraction,
        })
    }
}

impl From<KpiBayesModel> for ModelData {
    fn from(m: KpiBayesModel) -> Self {
        ModelData {
            net: m.net,
            config: m.config,
            rows_used: m.rows_used,
            clamped_fraction: m.clamped_fraction,
        }
    }
}

fn validate_structure(net: &DiscreteBayesNet, config: &BnmConfig) -> Result<()> {
    let spec = domain_structure(config)?;
    if net.nodes().len() != spec.len() {
        return Err(Error::Schema(format!(
            "network has {} nodes, configuration implies {}",
            net.nodes().len(),
            spec.len()
        )));
    }
    for (node, expected) in net.nodes().iter().zip(&spec) {
        if node.name != expected.name {
            return Err(Error::Schema(format!(
                "node '{}' where '{}' was expected",
                node.name, expected.name
            )));
        }
        if node.states != expected.states {
            return Err(Error::Schema(format!(
                "states of node '{}' do not match the configured bins",
                node.name
            )));
        }
        let parent_names: Vec<&str> = node
            .parents
            .iter()
            .map(|&p| net.nodes()[p].name.as_str())
            .collect();
        if parent_names != expected.parents {
            return Err(Error::Schema(format!(
                "parents of node '{}' are {parent_names:?}, expected {:?}",
                node.name, expected.parents
            )));
        }
    }
    Ok(())
}

/// The cell used as evidence: the one with the lower PUSCH SNR.
///
/// Interference hits one carrier hardest, and a detector does not know which
/// band is targeted, so both fitting and inference read the currently worse
/// cell. Ties go to the NR cell.
pub fn evidence_cell(row: &LabeledRow) -> &KpiSample {
    if row.lte.pusch_snr_db < row.nr.pusch_snr_db {
        &row.lte
    } else {
        &row.nr
    }
}

/// The discretized evidence values of one sample, as bin indices, plus how
/// many of the four values fell outside their configured ranges.
struct BinnedSample {
    snr: usize,
    cqi: usize,
    dl_mcs: usize,
    ul_mcs: usize,
    clamped: usize,
}

fn bin_sample(
    sample: &KpiSample,
    snr: &Discretizer,
    cqi: &Discretizer,
    mcs: &Discretizer,
) -> Result<BinnedSample> {
    let (snr_bin, c1) = snr.bin(sample.pusch_snr_db)?;
    let (cqi_bin, c2) = cqi.bin(f64::from(sample.cqi))?;
    let (dl_bin, c3) = mcs.bin(f64::from(sample.dl_mcs))?;
    let (ul_bin, c4) = mcs.bin(f64::from(sample.ul_mcs))?;
    Ok(BinnedSample {
        snr: snr_bin,
        cqi: cqi_bin,
        dl_mcs: dl_bin,
        ul_mcs: ul_bin,
        clamped: usize::from(c1) + usize::from(c2) + usize::from(c3) + usize::from(c4),
    })
}

/// Fits the belief network's CPTs from the given dataset rows.
pub fn fit_kpi_model(
    dataset: &LabeledDataset,
    rows: &[usize],
    config: &BnmConfig,
) -> Result<KpiBayesModel> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("training rows for the belief network".into()));
    }
    for &r in rows {
        if r >= dataset.rows.len() {
            return Err(Error::InvalidParameter(format!(
                "row index {r} out of range for {} rows",
                dataset.rows.len()
            )));
        }
    }

    let snr_d = config.snr_discretizer()?;
    let cqi_d = config.cqi_discretizer()?;
    let mcs_d = config.mcs_discretizer()?;
    let spec = domain_structure(config)?;
    let index_of: BTreeMap<&str, usize> =
        spec.iter().enumerate().map(|(i, n)| (n.name, i)).collect();
    let cards: Vec<usize> = spec.iter().map(|n| n.states.len()).collect();

    // counts[node][parent_row * card + state], laid out exactly like the CPT.
    let mut counts: Vec<Vec<f64>> = spec
        .iter()
        .map(|n| {
            let rows: usize = n.parents.iter().map(|p| cards[index_of[p]]).product();
            vec![0.0; rows * n.states.len()]
        })
        .collect();

    let mut clamped = 0usize;
    for &r in rows {
        let row = &dataset.rows[r];
        let binned = bin_sample(evidence_cell(row), &snr_d, &cqi_d, &mcs_d)?;
        clamped += binned.clamped;
        let mut assignment = vec![0usize; spec.len()];
        assignment[index_of[NODE_JAMMING]] = usize::from(row.label);
        assignment[index_of[NODE_SNR]] = binned.snr;
        assignment[index_of[NODE_CQI]] = binned.cqi;
        assignment[index_of[NODE_DL_MCS]] = binned.dl_mcs;
        assignment[index_of[NODE_UL_MCS]] = binned.ul_mcs;
        for (i, n) in spec.iter().enumerate() {
            let mut parent_row = 0usize;
            for p in &n.parents {
                let pi = index_of[p];
                parent_row = parent_row * cards[pi] + assignment[pi];
            }
            counts[i][parent_row * cards[i] + assignment[i]] += 1.0;
        }
    }

    let alpha = config.laplace_alpha;
    let nodes: Vec<BayesNode> = spec
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let card = cards[i];
            let cpt: Vec<f64> = counts[i]
                .chunks(card)
                .flat_map(|chunk| {
                    let total: f64 = chunk.iter().sum::<f64>() + alpha * card as f64;
                    chunk.iter().map(move |c| (c + alpha) / total)
                })
                .collect();
            BayesNode {
                name: n.name.to_string(),
                states: n.states.clone(),
                parents: n.parents.iter().map(|p| index_of[p]).collect(),
                cpt,
            }
        })
        .collect();

    Ok(KpiBayesModel {
        net: DiscreteBayesNet::new(nodes)?,
        config: config.clone(),
        rows_used: rows.len(),
        clamped_fraction: clamped as f64 / (4 * rows.len()) as f64,
    })
}

impl KpiBayesModel {
    pub fn net(&self) -> &DiscreteBayesNet {
        &self.net
    }

    pub fn config(&self) -> &BnmConfig {
        &self.config
    }

    /// Maps one cell's KPIs to named evidence states, clamping out-of-range
    /// values into the boundary bins. Returns the evidence map and the count
    /// of clamped values.
    pub fn evidence_from_sample(
        &self,
        sample: &KpiSample,
    ) -> Result<(BTreeMap<String, String>, usize)> {
        let snr_d = self.config.snr_discretizer()?;
        let cqi_d = self.config.cqi_discretizer()?;
        let mcs_d = self.config.mcs_discretizer()?;
        let binned = bin_sample(sample, &snr_d, &cqi_d, &mcs_d)?;
        let evidence = BTreeMap::from([
            (NODE_SNR.to_string(), snr_d.labels()[binned.snr].clone()),
            (NODE_CQI.to_string(), cqi_d.labels()[binned.cqi].clone()),
            (NODE_DL_MCS.to_string(), mcs_d.labels()[binned.dl_mcs].clone()),
            (NODE_UL_MCS.to_string(), mcs_d.labels()[binned.ul_mcs].clone()),
        ]);
        Ok((evidence, binned.clamped))
    }

    /// `P(jamming = present | evidence)` by variable elimination.
    pub fn posterior_jamming(&self, evidence: &BTreeMap<String, String>) -> Result<f64> {
        posterior(&self.net, NODE_JAMMING, evidence)?.probability_of(JAMMING_STATES[1])
    }

    /// Jamming posterior for one cell's KPI sample.
    pub fn posterior_jamming_for_sample(&self, sample: &KpiSample) -> Result<f64> {
        let (evidence, _) = self.evidence_from_sample(sample)?;
        self.posterior_jamming(&evidence)
    }

    /// Jamming posterior for a row, reading the worse of its two cells.
    pub fn posterior_jamming_for_row(&self, row: &LabeledRow) -> Result<f64> {
        self.posterior_jamming_for_sample(evidence_cell(row))
    }

    /// Prior marginal of every node, with no evidence applied.
    pub fn prior_marginals(&self) -> Result<Vec<Posterior>> {
        let no_evidence = BTreeMap::new();
        self.net
            .nodes()
            .iter()
            .map(|n| posterior(&self.net, &n.name, &no_evidence))
            .collect()
    }

    /// Aligned text table of every node's prior marginal.
    pub fn marginal_summary(&self) -> Result<String> {
        let marginals = self.prior_marginals()?;
        let name_width = marginals
            .iter()
            .map(|m| m.node.len())
            .max()
            .unwrap_or(4)
            .max("node".len());
        let state_width = marginals
            .iter()
            .flat_map(|m| m.states.iter().map(|s| s.len()))
            .max()
            .unwrap_or(5)
            .max("state".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:name_width$}  {:state_width$}  probability", "node", "state");
        for m in &marginals {
            for (state, p) in m.states.iter().zip(&m.probabilities) {
                let _ = writeln!(out, "{:name_width$}  {:state_width$}  {p:11.4}", m.node, state);
            }
        }
        Ok(out)
    }
}
