//! Domain structure of the KPI belief network: which variables matter, how
//! they are binned, and which causal arcs connect them.
//!
//! The structure encodes radio-domain knowledge rather than being learned:
//! interference degrades PUSCH SNR; the UE derives its CQI report from
//! channel quality; the scheduler picks DL MCS from CQI and UL MCS from the
//! measured uplink SNR together with the reported CQI.

use serde::{Deserialize, Serialize};

use crate::bayes::discretize::Discretizer;
use crate::error::{Error, Result};

/// Node names, fixed across the crate so evidence maps match artifacts.
pub const NODE_JAMMING: &str = "jamming";
pub const NODE_SNR: &str = "pusch_snr";
pub const NODE_CQI: &str = "cqi";
pub const NODE_DL_MCS: &str = "dl_mcs";
pub const NODE_UL_MCS: &str = "ul_mcs";

/// States of the root cause node.
pub const JAMMING_STATES: [&str; 2] = ["absent", "present"];

/// Binning and smoothing knobs for the belief network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BnmConfig {
    /// PUSCH SNR range in dB, split into `snr_bins` equal-width bins.
    pub snr_range_db: (f64, f64),
    pub snr_bins: usize,
    /// CQI bin edges over the 0..=15 report range.
    pub cqi_edges: Vec<f64>,
    /// MCS bin edges over the 0..=28 index range (shared by DL and UL).
    pub mcs_edges: Vec<f64>,
    /// Additive smoothing count applied to every CPT cell.
    pub laplace_alpha: f64,
}

impl Default for BnmConfig {
    fn default() -> Self {
        BnmConfig {
            snr_range_db: (-5.0, 35.0),
            snr_bins: 6,
            cqi_edges: vec![0.0, 4.0, 8.0, 12.0, 16.0],
            mcs_edges: vec![0.0, 7.0, 14.0, 21.0, 29.0],
            laplace_alpha: 1.0,
        }
    }
}

impl BnmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.laplace_alpha > 0.0 && self.laplace_alpha.is_finite()) {
            return Err(Error::InvalidParameter(
                "laplace_alpha must be a positive finite count".into(),
            ));
        }
        // Delegate edge validation to the discretizers themselves.
        self.snr_discretizer()?;
        self.cqi_discretizer()?;
        self.mcs_discretizer()?;
        Ok(())
    }

    pub fn snr_discretizer(&self) -> Result<Discretizer> {
        Discretizer::uniform(self.snr_range_db.0, self.snr_range_db.1, self.snr_bins)
    }

    pub fn cqi_discretizer(&self) -> Result<Discretizer> {
        Discretizer::from_edges(self.cqi_edges.clone())
    }

    pub fn mcs_discretizer(&self) -> Result<Discretizer> {
        Discretizer::from_edges(self.mcs_edges.clone())
    }
}

/// One node of the domain structure: its name, state labels, and parents.
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub name: &'static str,
    pub states: Vec<String>,
    pub parents: Vec<&'static str>,
}

/// The causal arcs, in an order where parents precede children.
pub fn domain_structure(config: &BnmConfig) -> Result<Vec<NodeSpec>> {
    config.validate()?;
    let snr = config.snr_discretizer()?;
    let cqi = config.cqi_discretizer()?;
    let mcs = config.mcs_discretizer()?;
    let labels = |d: &Discretizer| d.labels().to_vec();
    Ok(vec![
        NodeSpec {
            name: NODE_JAMMING,
            states: JAMMING_STATES.iter().map(|s| s.to_string()).collect(),
            parents: vec![],
        },
        NodeSpec {
            name: NODE_SNR,
            states: labels(&snr),
            parents: vec![NODE_JAMMING],
        },
        NodeSpec {
            name: NODE_CQI,
            states: labels(&cqi),
            parents: vec![NODE_JAMMING, NODE_SNR],
        },
        NodeSpec {
            name: NODE_DL_MCS,
            states: labels(&mcs),
            parents: vec![NODE_CQI],
        },
        NodeSpec {
            name: NODE_UL_MCS,
            states: labels(&mcs),
            parents: vec![NODE_SNR, NODE_CQI],
        },
    ])
}
