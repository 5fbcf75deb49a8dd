//! Gaussian naive Bayes with per-class diagonal covariance.

use serde::{Deserialize, Serialize};

use super::{check_point, check_training_set, sigmoid, Detector};
use crate::error::Result;

/// Naive Bayes assuming each feature is Gaussian within each class.
///
/// Variances are maximum-likelihood (population) estimates; any variance
/// below `variance_floor` is clamped to it and the feature is recorded in
/// `floored_features`, since a zero variance would make the likelihood
/// degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianNaiveBayes {
    pub variance_floor: f64,
    log_prior_pos: f64,
    log_prior_neg: f64,
    mean_pos: Vec<f64>,
    mean_neg: Vec<f64>,
    var_pos: Vec<f64>,
    var_neg: Vec<f64>,
    /// Feature indices whose variance was clamped in either class.
    pub floored_features: Vec<usize>,
    fitted: bool,
}

impl Default for GaussianNaiveBayes {
    fn default() -> Self {
        GaussianNaiveBayes {
            variance_floor: 1e-9,
            log_prior_pos: 0.0,
            log_prior_neg: 0.0,
            mean_pos: Vec::new(),
            mean_neg: Vec::new(),
            var_pos: Vec::new(),
            var_neg: Vec::new(),
            floored_features: Vec::new(),
            fitted: false,
        }
    }
}

fn class_stats(rows: &[&Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    for v in &mut var {
        *v /= n;
    }
    (mean, var)
}

impl GaussianNaiveBayes {
    /// Log-density of `x` under the fitted diagonal Gaussian of one class.
    fn class_log_likelihood(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
        let mut ll = 0.0;
        for ((&xi, &m), &v) in x.iter().zip(mean).zip(var) {
            let d = xi - m;
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * v).ln() + d * d / v);
        }
        ll
    }
}

impl Detector for GaussianNaiveBayes {
    fn name(&self) -> &'static str {
        "gnb"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        let dim = check_training_set(features, labels)?;
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(crate::error::Error::InvalidParameter(format!(
                "variance_floor must be positive, got {}",
                self.variance_floor
            )));
        }
        let pos: Vec<&Vec<f64>> = features
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l)
            .map(|(r, _)| r)
            .collect();
        let neg: Vec<&Vec<f64>> = features
            .iter()
            .zip(labels)
            .filter(|(_, &l)| !l)
            .map(|(r, _)| r)
            .collect();
        let (mean_pos, mut var_pos) = class_stats(&pos, dim);
        let (mean_neg, mut var_neg) = class_stats(&neg, dim);

        self.floored_features.clear();
        for i in 0..dim {
            let mut floored = false;
            if var_pos[i] < self.variance_floor {
                var_pos[i] = self.variance_floor;
                floored = true;
            }
            if var_neg[i] < self.variance_floor {
                var_neg[i] = self.variance_floor;
                floored = true;
            }
            if floored {
                self.floored_features.push(i);
            }
        }
        if !self.floored_features.is_empty() {
            log::warn!(
                "variance floor {} applied to features {:?}",
                self.variance_floor,
                self.floored_features
            );
        }

        let n = features.len() as f64;
        self.log_prior_pos = (pos.len() as f64 / n).ln();
        self.log_prior_neg = (neg.len() as f64 / n).ln();
        self.mean_pos = mean_pos;
        self.mean_neg = mean_neg;
        self.var_pos = var_pos;
        self.var_neg = var_neg;
        self.fitted = true;
        Ok(())
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(self.fitted.then_some(self.mean_pos.len()), features)?;
        let log_pos = self.log_prior_pos
            + Self::class_log_likelihood(features, &self.mean_pos, &self.var_pos);
        let log_neg = self.log_prior_neg
            + Self::class_log_likelihood(features, &self.mean_neg, &self.var_neg);
        Ok(sigmoid(log_pos - log_neg))
    }

    fn trainable_parameters(&self) -> usize {
        // Two means and two variances per feature, plus the prior.
        4 * self.mean_pos.len() + 1
    }
}
