//! Discrete Bayesian network over cross-layer KPIs: factor algebra,
//! network validation, variable-elimination inference, KPI discretization,
//! the radio-domain structure, and CPT fitting from labeled data.

mod discretize;
mod factor;
mod fit;
mod infer;
mod net;
mod rules;

pub use discretize::Discretizer;
pub use factor::Factor;
pub use fit::{evidence_cell, fit_kpi_model, KpiBayesModel};
pub use infer::{posterior, posterior_by_enumeration, Posterior};
pub use net::{random_net, BayesNode, DiscreteBayesNet, CPT_ROW_SUM_TOLERANCE};
pub use rules::{
    domain_structure, BnmConfig, NodeSpec, JAMMING_STATES, NODE_CQI, NODE_DL_MCS, NODE_JAMMING,
    NODE_SNR, NODE_UL_MCS,
};
