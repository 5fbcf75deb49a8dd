//! Detection of RF jamming on cellular links from cross-layer KPIs.
//!
//! The crate covers the full experiment pipeline:
//!
//! * [`kpi`] — domain types plus the 3GPP CQI/MCS mapping tables;
//! * [`datagen`] — a causal synthetic-KPI generator and CSV dataset store;
//! * [`detect`] — per-sample classifiers (logistic regression, naive Bayes,
//!   decision tree, random forest, k-NN, AdaBoost);
//! * [`esn`] — an echo state network scored over short KPI windows;
//! * [`bayes`] — a discrete Bayesian network over the KPI causal structure
//!   with exact posterior inference;
//! * [`correction`] — posterior-driven review of detector decisions;
//! * [`eval`] — ROC/AUC analysis, stratified splits and timing helpers.

pub mod bayes;
pub mod correction;
pub mod datagen;
pub mod detect;
pub mod error;
pub mod esn;
pub mod eval;
pub mod kpi;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use kpi::{
    BandLabel, CellKind, JammingScenario, KpiSample, LookupRule, MappingTables, Protocol,
    KPI_FEATURE_COUNT, KPI_FEATURE_NAMES,
};
