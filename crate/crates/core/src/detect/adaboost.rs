//! AdaBoost over depth-1 decision stumps.

use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, DecisionTreeParams};
use super::{check_point, check_training_set, Detector};
use crate::error::{Error, Result};

/// Weighted error clamp; keeps stage weights finite on zero-error stumps.
const ERR_EPS: f64 = 1e-12;

/// Discrete AdaBoost ensemble of axis-aligned stumps.
///
/// Each round fits the exhaustive best stump under the current sample
/// weights, then re-weights samples multiplicatively. Boosting stops early
/// when a stump is perfect (nothing left to fix) or no better than chance
/// (further rounds would repeat it). The score is the positive share of the
/// stage-weighted vote, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoost {
    pub n_stumps: usize,
    stages: Vec<(DecisionTree, f64)>,
    dim: Option<usize>,
}

impl Default for AdaBoost {
    fn default() -> Self {
        AdaBoost {
            n_stumps: 50,
            stages: Vec::new(),
            dim: None,
        }
    }
}

impl AdaBoost {
    pub fn stages(&self) -> &[(DecisionTree, f64)] {
        &self.stages
    }
}

impl Detector for AdaBoost {
    fn name(&self) -> &'static str {
        "adaboost"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        let dim = check_training_set(features, labels)?;
        if self.n_stumps == 0 {
            return Err(Error::InvalidParameter("n_stumps must be > 0".into()));
        }
        let n = features.len();
        let mut weights = vec![1.0 / n as f64; n];
        self.stages.clear();

        for _ in 0..self.n_stumps {
            let mut stump = DecisionTree::new(DecisionTreeParams {
                max_depth: 1,
                min_samples_split: 2,
            });
            stump.fit_weighted(features, labels, &weights)?;
            let votes: Vec<bool> = features
                .iter()
                .map(|row| stump.score(row).map(|p| p > 0.5))
                .collect::<Result<_>>()?;
            let err: f64 = weights
                .iter()
                .zip(votes.iter().zip(labels))
                .filter(|(_, (vote, label))| vote != label)
                .map(|(w, _)| w)
                .sum();

            if err >= 0.5 - ERR_EPS {
                // No better than chance under the current weights; the next
                // round would fit the same stump, so stop boosting here.
                break;
            }
            let clamped = err.max(ERR_EPS);
            let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
            self.stages.push((stump, alpha));
            if err <= ERR_EPS {
                break; // perfect stump: residual weights would be degenerate
            }

            let up = alpha.exp();
            let down = (-alpha).exp();
            for (w, (vote, label)) in weights.iter_mut().zip(votes.iter().zip(labels)) {
                *w *= if vote == label { down } else { up };
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
        }

        if self.stages.is_empty() {
            // First stump was already at chance level: keep it with zero
            // stage weight so the detector still produces a valid score.
            let mut stump = DecisionTree::new(DecisionTreeParams {
                max_depth: 1,
                min_samples_split: 2,
            });
            stump.fit_weighted(features, labels, &weights)?;
            self.stages.push((stump, 0.0));
        }
        self.dim = Some(dim);
        Ok(())
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(self.dim, features)?;
        let total: f64 = self.stages.iter().map(|(_, a)| a).sum();
        if total <= 0.0 {
            // Chance-level ensemble: fall back to the lone stump's estimate.
            return self.stages[0].0.score(features);
        }
        let mut pos = 0.0;
        for (stump, alpha) in &self.stages {
            if stump.score(features)? > 0.5 {
                pos += alpha;
            }
        }
        Ok(pos / total)
    }

    fn trainable_parameters(&self) -> usize {
        // Stump parameters plus one stage weight per stump.
        self.stages
            .iter()
            .map(|(s, _)| s.trainable_parameters() + 1)
            .sum()
    }
}
