//! Posterior-guided correction of borderline detector decisions.
//!
//! A trained detector decides "jammed" when its score exceeds a threshold.
//! Scores near that threshold are the least trustworthy, so for windows
//! inside a configurable band around it the belief network's jamming
//! posterior gets a vote: a confident posterior on the other side of one
//! half flips the decision, anything less leaves it alone. Decisions far
//! from the threshold are never touched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kpi::KpiSample;

/// Width of the uncertainty band and the posterior confidence margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionParams {
    /// Decisions with `|score - threshold| <= band` are eligible.
    pub band: f64,
    /// A flip needs the posterior beyond `0.5 + delta` (to assert jamming)
    /// or below `0.5 - delta` (to retract it).
    pub delta: f64,
}

impl Default for CorrectionParams {
    fn default() -> Self {
        CorrectionParams {
            band: 0.2,
            delta: 0.1,
        }
    }
}

impl CorrectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.band > 0.0 && self.band <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "band must be in (0, 0.5], got {}",
                self.band
            )));
        }
        if !self.delta.is_finite() || !(0.0..0.5).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!(
                "delta must be in [0, 0.5), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// One flipped decision, kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionAudit {
    pub window_index: usize,
    pub score: f64,
    pub posterior: f64,
    pub original: bool,
    pub corrected: bool,
    pub label: bool,
}

/// Mean jamming posterior per confusion quadrant of the original decisions;
/// `None` where the quadrant is empty or carries no posteriors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct QuadrantPosteriorMeans {
    pub true_positive: Option<f64>,
    pub false_positive: Option<f64>,
    pub true_negative: Option<f64>,
    pub false_negative: Option<f64>,
}

/// Outcome of one correction pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionReport {
    pub params: CorrectionParams,
    pub threshold: f64,
    pub n_windows: usize,
    /// Windows inside the band whose posterior was available.
    pub consulted: usize,
    /// Windows inside the band whose posterior was missing.
    pub skipped_missing: usize,
    pub flips: usize,
    pub prior_false_negatives: usize,
    pub prior_false_positives: usize,
    pub fixed_false_negatives: usize,
    pub fixed_false_positives: usize,
    /// Originally correct decisions the pass made wrong.
    pub newly_broken: usize,
    /// Originally correct decisions, the denominator for `newly_broken`.
    pub prior_correct: usize,
    pub fn_fixed_fraction: Option<f64>,
    pub fp_fixed_fraction: Option<f64>,
    pub combined_fixed_fraction: Option<f64>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub mean_posterior: QuadrantPosteriorMeans,
    /// Every flipped window.
    pub audit: Vec<CorrectionAudit>,
    /// Final decisions, flips applied.
    pub decisions: Vec<bool>,
}

/// Applies posterior-guided correction to thresholded scores.
///
/// `posteriors[i]` is the belief network's jamming posterior for window `i`,
/// or `None` when its evidence was unavailable; such windows are counted in
/// `skipped_missing` and left untouched.
pub fn correct_predictions(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
    posteriors: &[Option<f64>],
    params: &CorrectionParams,
) -> Result<CorrectionReport> {
    params.validate()?;
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores".into()));
    }
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
        });
    }
    if posteriors.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: posteriors.len(),
        });
    }
    if threshold.is_nan() {
        return Err(Error::NonFinite("threshold".into()));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    if let Some(bad) = posteriors
        .iter()
        .flatten()
        .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
    {
        return Err(Error::InvalidParameter(format!(
            "posterior {bad} outside [0, 1]"
        )));
    }

    let original: Vec<bool> = scores.iter().map(|&s| s > threshold).collect();

    let mut decisions = original.clone();
    let mut consulted = 0usize;
    let mut skipped_missing = 0usize;
    let mut audit = Vec::new();
    for i in 0..scores.len() {
        if (scores[i] - threshold).abs() > params.band {
            continue;
        }
        let Some(p) = posteriors[i] else {
            skipped_missing += 1;
            log::warn!("window {i} sits in the correction band but has no posterior");
            continue;
        };
        consulted += 1;
        let corrected = if !original[i] && p > 0.5 + params.delta {
            true
        } else if original[i] && p < 0.5 - params.delta {
            false
        } else {
            original[i]
        };
        if corrected != original[i] {
            decisions[i] = corrected;
            audit.push(CorrectionAudit {
                window_index: i,
                score: scores[i],
                posterior: p,
                original: original[i],
                corrected,
                label: labels[i],
            });
        }
    }

    let count = |pred: &dyn Fn(usize) -> bool| (0..scores.len()).filter(|&i| pred(i)).count();
    let prior_fn = count(&|i| labels[i] && !original[i]);
    let prior_fp = count(&|i| !labels[i] && original[i]);
    let prior_correct = scores.len() - prior_fn - prior_fp;
    let fixed_fn = count(&|i| labels[i] && !original[i] && decisions[i]);
    let fixed_fp = count(&|i| !labels[i] && original[i] && !decisions[i]);
    let newly_broken = count(&|i| original[i] == labels[i] && decisions[i] != labels[i]);
    let correct_after = count(&|i| decisions[i] == labels[i]);

    let fraction = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);

    let mut sums = [(0.0f64, 0usize); 4]; // tp, fp, tn, fn of the original decisions
    for i in 0..scores.len() {
        if let Some(p) = posteriors[i] {
            let quadrant = match (original[i], labels[i]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, false) => 2,
                (false, true) => 3,
            };
            sums[quadrant].0 += p;
            sums[quadrant].1 += 1;
        }
    }
    let mean = |q: usize| (sums[q].1 > 0).then(|| sums[q].0 / sums[q].1 as f64);

    Ok(CorrectionReport {
        params: *params,
        threshold,
        n_windows: scores.len(),
        consulted,
        skipped_missing,
        flips: audit.len(),
        prior_false_negatives: prior_fn,
        prior_false_positives: prior_fp,
        fixed_false_negatives: fixed_fn,
        fixed_false_positives: fixed_fp,
        newly_broken,
        prior_correct,
        fn_fixed_fraction: fraction(fixed_fn, prior_fn),
        fp_fixed_fraction: fraction(fixed_fp, prior_fp),
        combined_fixed_fraction: fraction(fixed_fn + fixed_fp, prior_fn + prior_fp),
        accuracy_before: prior_correct as f64 / scores.len() as f64,
        accuracy_after: correct_after as f64 / scores.len() as f64,
        mean_posterior: QuadrantPosteriorMeans {
            true_positive: mean(0),
            false_positive: mean(1),
            true_negative: mean(2),
            false_negative: mean(3),
        },
        audit,
        decisions,
    })
}

/// Mean KPI values of the samples falling in one confusion quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantKpiSummary {
    pub count: usize,
    pub mean_pusch_snr_db: f64,
    pub mean_cqi: f64,
    pub mean_dl_mcs: f64,
    pub mean_ul_mcs: f64,
}

/// Where the detector's errors cluster, in KPI terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ErrorClusters {
    pub true_positive: Option<QuadrantKpiSummary>,
    pub false_positive: Option<QuadrantKpiSummary>,
    pub true_negative: Option<QuadrantKpiSummary>,
    pub false_negative: Option<QuadrantKpiSummary>,
}

/// Summarizes the KPI evidence per confusion quadrant of `score > threshold`
/// decisions, to show which channel conditions drive the detector's errors.
pub fn error_cluster_summary(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
    samples: &[KpiSample],
) -> Result<ErrorClusters> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores".into()));
    }
    if labels.len() != scores.len() || samples.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len().min(samples.len()),
        });
    }
    if threshold.is_nan() {
        return Err(Error::NonFinite("threshold".into()));
    }

    let mut acc = [(0usize, 0.0f64, 0.0f64, 0.0f64, 0.0f64); 4];
    for i in 0..scores.len() {
        let predicted = scores[i] > threshold;
        let quadrant = match (predicted, labels[i]) {
            (true, true) => 0,
            (true, false) => 1,
            (false, false) => 2,
            (false, true) => 3,
        };
        let a = &mut acc[quadrant];
        a.0 += 1;
        a.1 += samples[i].pusch_snr_db;
        a.2 += f64::from(samples[i].cqi);
        a.3 += f64::from(samples[i].dl_mcs);
        a.4 += f64::from(samples[i].ul_mcs);
    }
    let summarize = |q: usize| -> Option<QuadrantKpiSummary> {
        let (n, snr, cqi, dl, ul) = acc[q];
        (n > 0).then(|| QuadrantKpiSummary {
            count: n,
            mean_pusch_snr_db: snr / n as f64,
            mean_cqi: cqi / n as f64,
            mean_dl_mcs: dl / n as f64,
            mean_ul_mcs: ul / n as f64,
        })
    };
    Ok(ErrorClusters {
        true_positive: summarize(0),
        false_positive: summarize(1),
        true_negative: summarize(2),
        false_negative: summarize(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kpi::CellKind;
    use crate::testutil;

    const P: CorrectionParams = CorrectionParams {
        band: 0.2,
        delta: 0.1,
    };

    #[test]
    fn test_confident_posteriors_flip_borderline_errors() {
        // Threshold 0.5, band [0.3, 0.7].
        let scores = vec![0.45, 0.55, 0.45, 0.55];
        let labels = vec![true, false, false, true];
        // FN with high posterior, FP with low posterior: both get fixed.
        // The remaining two are already correct and keep their decisions.
        let posteriors = vec![Some(0.9), Some(0.2), Some(0.3), Some(0.8)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.decisions, vec![true, false, false, true]);
        assert_eq!(r.flips, 2);
        assert_eq!((r.prior_false_negatives, r.prior_false_positives), (1, 1));
        assert_eq!((r.fixed_false_negatives, r.fixed_false_positives), (1, 1));
        assert_eq!(r.newly_broken, 0);
        assert_eq!(r.combined_fixed_fraction, Some(1.0));
        assert_eq!(r.accuracy_before, 0.5);
        assert_eq!(r.accuracy_after, 1.0);
        assert_eq!(r.consulted, 4);
        assert_eq!(r.audit.len(), 2);
        assert_eq!(r.audit[0].window_index, 0);
        assert!(r.audit[0].corrected && !r.audit[0].original);
    }

    #[test]
    fn test_decisions_outside_the_band_are_never_touched() {
        let scores = vec![0.05, 0.95];
        let labels = vec![true, false]; // both wrong, both far from 0.5
        let posteriors = vec![Some(0.99), Some(0.01)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.decisions, vec![false, true]);
        assert_eq!(r.flips, 0);
        assert_eq!(r.consulted, 0);
        assert_eq!(r.accuracy_after, 0.0);
    }

    #[test]
    fn test_unconfident_posteriors_do_not_flip() {
        let scores = vec![0.45, 0.55];
        let labels = vec![true, false];
        // Inside the band but within the delta margin around one half.
        let posteriors = vec![Some(0.59), Some(0.41)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.flips, 0);
        assert_eq!(r.consulted, 2);
        // Exactly at the margin is still not enough.
        let posteriors = vec![Some(0.6), Some(0.4)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.flips, 0);
    }

    #[test]
    fn test_posterior_can_break_a_correct_decision() {
        let scores = vec![0.45, 0.55];
        let labels = vec![false, true]; // both originally correct
        let posteriors = vec![Some(0.95), Some(0.05)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.flips, 2);
        assert_eq!(r.newly_broken, 2);
        assert_eq!(r.prior_correct, 2);
        assert_eq!(r.accuracy_before, 1.0);
        assert_eq!(r.accuracy_after, 0.0);
        assert_eq!(r.combined_fixed_fraction, None, "no errors to fix");
    }

    #[test]
    fn test_missing_posteriors_are_skipped_and_counted() {
        let scores = vec![0.45, 0.55, 0.9];
        let labels = vec![true, false, true];
        let posteriors = vec![None, Some(0.2), None];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        // Window 0 is in the band but has no posterior; window 2 is outside
        // the band, so its missing posterior is not counted.
        assert_eq!(r.skipped_missing, 1);
        assert_eq!(r.consulted, 1);
        assert_eq!(r.decisions, vec![false, false, true]);
    }

    #[test]
    fn test_quadrant_posterior_means() {
        let scores = vec![0.9, 0.9, 0.1, 0.1];
        let labels = vec![true, false, false, true];
        let posteriors = vec![Some(0.8), Some(0.6), Some(0.1), Some(0.7)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.mean_posterior.true_positive, Some(0.8));
        assert_eq!(r.mean_posterior.false_positive, Some(0.6));
        assert_eq!(r.mean_posterior.true_negative, Some(0.1));
        assert_eq!(r.mean_posterior.false_negative, Some(0.7));
    }

    #[test]
    fn test_band_boundary_is_inclusive() {
        let scores = vec![0.3, 0.7];
        let labels = vec![true, false];
        let posteriors = vec![Some(0.9), Some(0.1)];
        let r = correct_predictions(&scores, &labels, 0.5, &posteriors, &P).unwrap();
        assert_eq!(r.consulted, 2, "|score - threshold| == band is eligible");
        assert_eq!(r.flips, 2);
    }

    #[test]
    fn test_input_validation() {
        let ok = vec![Some(0.5)];
        assert!(correct_predictions(&[], &[], 0.5, &[], &P).is_err());
        assert!(correct_predictions(&[0.5], &[true, false], 0.5, &ok, &P).is_err());
        assert!(correct_predictions(&[0.5], &[true], 0.5, &[], &P).is_err());
        assert!(correct_predictions(&[f64::NAN], &[true], 0.5, &ok, &P).is_err());
        assert!(correct_predictions(&[0.5], &[true], f64::NAN, &ok, &P).is_err());
        assert!(correct_predictions(&[0.5], &[true], 0.5, &[Some(1.5)], &P).is_err());
        let bad = CorrectionParams {
            band: -1.0,
            delta: 0.1,
        };
        assert!(correct_predictions(&[0.5], &[true], 0.5, &ok, &bad).is_err());
        let bad = CorrectionParams {
            band: 0.2,
            delta: 0.5,
        };
        assert!(correct_predictions(&[0.5], &[true], 0.5, &ok, &bad).is_err());
    }

    #[test]
    fn test_error_clusters_average_the_right_samples() {
        let samples: Vec<_> = (0..4)
            .map(|i| testutil::sample(CellKind::Nr, i * 180, i >= 2, 0))
            .collect();
        let scores = vec![0.9, 0.9, 0.1, 0.1];
        let labels = vec![true, false, false, true];
        let clusters = error_cluster_summary(&scores, &labels, 0.5, &samples).unwrap();
        // Samples 0 and 1 are clean KPIs (snr 16), 2 and 3 degraded (snr 4).
        let tp = clusters.true_positive.unwrap();
        assert_eq!(tp.count, 1);
        assert_eq!(tp.mean_pusch_snr_db, 16.0);
        assert_eq!(tp.mean_cqi, 12.0);
        let fn_ = clusters.false_negative.unwrap();
        assert_eq!(fn_.count, 1);
        assert_eq!(fn_.mean_pusch_snr_db, 4.0);
        assert_eq!(fn_.mean_dl_mcs, 8.0);
        assert_eq!(fn_.mean_ul_mcs, 6.0);

        // All-positive labels leave the negative quadrants empty.
        let clusters =
            error_cluster_summary(&scores, &[true; 4], 0.5, &samples).unwrap();
        assert!(clusters.true_negative.is_none());
        assert!(clusters.false_positive.is_none());
    }

    #[test]
    fn test_error_clusters_validation() {
        let samples = vec![testutil::sample(CellKind::Nr, 0, false, 0)];
        assert!(error_cluster_summary(&[], &[], 0.5, &[]).is_err());
        assert!(error_cluster_summary(&[0.5], &[true, false], 0.5, &samples).is_err());
        assert!(error_cluster_summary(&[0.5], &[true], f64::NAN, &samples).is_err());
    }
}
