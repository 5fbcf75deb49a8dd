//! k-nearest-neighbour detector over Euclidean distance.

use serde::{Deserialize, Serialize};

use super::{check_point, check_training_set, Detector};
use crate::error::{Error, Result};

/// Memorizing detector: the score is the fraction of positives among the
/// `k` nearest training rows.
///
/// `k` must be odd so a majority always exists. Distance ties are broken by
/// training-row index, which makes scoring deterministic. Inputs are assumed
/// pre-normalized; raw KPI columns span wildly different magnitudes and
/// would otherwise drown the distance in bitrate terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KNearestNeighbors {
    pub k: usize,
    train_x: Vec<Vec<f64>>,
    train_y: Vec<bool>,
}

impl Default for KNearestNeighbors {
    fn default() -> Self {
        KNearestNeighbors {
            k: 5,
            train_x: Vec::new(),
            train_y: Vec::new(),
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Detector for KNearestNeighbors {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        check_training_set(features, labels)?;
        if self.k == 0 || self.k % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "k must be a positive odd number, got {}",
                self.k
            )));
        }
        if self.k > features.len() {
            return Err(Error::InvalidParameter(format!(
                "k = {} exceeds the {} training rows",
                self.k,
                features.len()
            )));
        }
        self.train_x = features.to_vec();
        self.train_y = labels.to_vec();
        Ok(())
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(
            (!self.train_x.is_empty()).then(|| self.train_x[0].len()),
            features,
        )?;
        let mut dist: Vec<(f64, usize)> = self
            .train_x
            .iter()
            .enumerate()
            .map(|(i, row)| (squared_distance(features, row), i))
            .collect();
        dist.select_nth_unstable_by(self.k - 1, |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        });
        let positives = dist[..self.k]
            .iter()
            .filter(|&&(_, i)| self.train_y[i])
            .count();
        Ok(positives as f64 / self.k as f64)
    }

    fn trainable_parameters(&self) -> usize {
        // Pure memorizer: fit stores the data but adjusts no parameters.
        0
    }
}
