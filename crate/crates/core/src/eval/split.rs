//! Stratified train/test split plus k-fold assignments for cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};

/// Split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of rows held out for the final test evaluation.
    pub test_fraction: f64,
    /// Number of cross-validation folds over the training portion.
    pub folds: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.25,
            folds: 5,
            seed: 42,
        }
    }
}

/// Deterministic row assignments produced by [`split_and_cv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignments {
    /// Held-out test rows, ascending.
    pub test: Vec<usize>,
    /// Training rows partitioned into folds; each list ascending.
    pub folds: Vec<Vec<usize>>,
}

impl SplitAssignments {
    /// All training rows (every fold merged), ascending.
    pub fn train(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    /// Training rows excluding one fold, ascending; used as the fit set when
    /// validating on that fold.
    pub fn train_without_fold(&self, fold: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }
}

/// Splits rows into a held-out test set and `folds` cross-validation folds,
/// stratified by (label, scenario).
///
/// Within each stratum the chronological tail becomes the test block, so a
/// consecutive-sample window never straddles the train/test boundary in
/// time. Test sizes follow largest-remainder allocation, which makes the
/// total exactly `round(test_fraction * n)`. Training rows are shuffled
/// per-stratum with a seeded generator and dealt round-robin, keeping both
/// fold sizes and label proportions within one row of each other.
pub fn split_and_cv(dataset: &LabeledDataset, cfg: &SplitConfig) -> Result<SplitAssignments> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("dataset".into()));
    }
    if !(0.0..1.0).contains(&cfg.test_fraction) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must be in [0, 1), got {}",
            cfg.test_fraction
        )));
    }
    if cfg.folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "folds must be >= 2, got {}",
            cfg.folds
        )));
    }

    // Strata keyed by (label, scenario); BTreeMap fixes the iteration order.
    let mut strata: BTreeMap<(bool, &str), Vec<usize>> = BTreeMap::new();
    for (i, row) in dataset.rows.iter().enumerate() {
        strata
            .entry((row.label, row.scenario_id.as_str()))
            .or_default()
            .push(i);
    }

    // Largest-remainder allocation of the test quota across strata.
    let stratum_rows: Vec<&Vec<usize>> = strata.values().collect();
    let n_total = dataset.len();
    let target_test = (cfg.test_fraction * n_total as f64).round() as usize;
    let mut quotas: Vec<usize> = Vec::with_capacity(stratum_rows.len());
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(stratum_rows.len());
    for (slot, rows) in stratum_rows.iter().enumerate() {
        let exact = cfg.test_fraction * rows.len() as f64;
        let floor = exact.floor() as usize;
        quotas.push(floor.min(rows.len()));
        remainders.push((exact - floor as f64, slot));
    }
    let mut assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite").then(a.1.cmp(&b.1)));
    for &(_, slot) in &remainders {
        if assigned >= target_test {
            break;
        }
        if quotas[slot] < stratum_rows[slot].len() {
            quotas[slot] += 1;
            assigned += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut test = Vec::new();
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); cfg.folds];
    let mut deal = 0usize;
    for (rows, quota) in stratum_rows.iter().zip(&quotas) {
        let cut = rows.len() - quota;
        test.extend_from_slice(&rows[cut..]);
        let mut train_rows = rows[..cut].to_vec();
        train_rows.shuffle(&mut rng);
        for idx in train_rows {
            folds[deal % cfg.folds].push(idx);
            deal += 1;
        }
    }
    test.sort_unstable();
    for fold in &mut folds {
        fold.sort_unstable();
    }

    for (i, fold) in folds.iter().enumerate() {
        let has_pos = fold.iter().any(|&r| dataset.rows[r].label);
        let has_neg = fold.iter().any(|&r| !dataset.rows[r].label);
        if !has_pos || !has_neg {
            return Err(Error::InvalidParameter(format!(
                "fold {i} is missing a class; use fewer folds or more data"
            )));
        }
    }
    Ok(SplitAssignments { test, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::synthetic_rows;

    #[test]
    fn test_balanced_hundred_rows_split_25_and_5x15() {
        let ds = synthetic_rows(&[("s", 50, 50)]);
        let split = split_and_cv(&ds, &SplitConfig::default()).unwrap();
        assert_eq!(split.test.len(), 25);
        assert_eq!(split.folds.len(), 5);
        for fold in &split.folds {
            assert_eq!(fold.len(), 15);
        }
    }

    #[test]
    fn test_label_proportions_per_fold_within_one_row() {
        let ds = synthetic_rows(&[("a", 50, 50), ("b", 30, 30)]);
        let split = split_and_cv(&ds, &SplitConfig::default()).unwrap();
        let counts: Vec<usize> = split
            .folds
            .iter()
            .map(|f| f.iter().filter(|&&r| ds.rows[r].label).count())
            .collect();
        let lo = counts.iter().min().unwrap();
        let hi = counts.iter().max().unwrap();
        assert!(hi - lo <= 1, "positive counts per fold: {counts:?}");
    }

    #[test]
    fn test_partition_is_disjoint_and_complete() {
        let ds = synthetic_rows(&[("a", 40, 40), ("b", 25, 25)]);
        let split = split_and_cv(&ds, &SplitConfig::default()).unwrap();
        let mut seen = vec![0usize; ds.len()];
        for &i in split.test.iter().chain(split.folds.iter().flatten()) {
            seen[i] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1), "rows must appear exactly once");
    }

    #[test]
    fn test_test_block_is_the_chronological_tail_per_stratum() {
        let ds = synthetic_rows(&[("a", 40, 40)]);
        let split = split_and_cv(&ds, &SplitConfig::default()).unwrap();
        // Within each (label, scenario) stratum, every test row must come
        // after every training row in time.
        for label in [false, true] {
            let max_train_ts = split
                .train()
                .iter()
                .filter(|&&r| ds.rows[r].label == label)
                .map(|&r| ds.rows[r].nr.timestamp_ms)
                .max()
                .unwrap();
            let min_test_ts = split
                .test
                .iter()
                .filter(|&&r| ds.rows[r].label == label)
                .map(|&r| ds.rows[r].nr.timestamp_ms)
                .min()
                .unwrap();
            assert!(min_test_ts > max_train_ts);
        }
    }

    #[test]
    fn test_same_seed_reproduces_assignments() {
        let ds = synthetic_rows(&[("a", 50, 50), ("b", 20, 20)]);
        let cfg = SplitConfig::default();
        let a = split_and_cv(&ds, &cfg).unwrap();
        let b = split_and_cv(&ds, &cfg).unwrap();
        assert_eq!(a, b);

        let c = split_and_cv(
            &ds,
            &SplitConfig {
                seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a.test, c.test, "test block does not depend on the seed");
        assert_ne!(a.folds, c.folds, "fold composition must follow the seed");
    }

    #[test]
    fn test_too_few_rows_for_folds_errors_with_suggestion() {
        let ds = synthetic_rows(&[("a", 3, 3)]);
        let err = split_and_cv(&ds, &SplitConfig::default()).unwrap_err();
        assert!(err.to_string().contains("fewer folds"), "{err}");
    }

    #[test]
    fn test_parameter_validation() {
        let ds = synthetic_rows(&[("a", 10, 10)]);
        let mut cfg = SplitConfig::default();
        cfg.test_fraction = 1.0;
        assert!(split_and_cv(&ds, &cfg).is_err());
        let mut cfg = SplitConfig::default();
        cfg.folds = 1;
        assert!(split_and_cv(&ds, &cfg).is_err());
        assert!(split_and_cv(&LabeledDataset::default(), &SplitConfig::default()).is_err());
    }
}
