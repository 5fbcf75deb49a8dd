//! Instantaneous (single-window) jamming detectors.
//!
//! Every detector consumes one fixed-length feature vector per decision and
//! emits a score in `[0, 1]` where larger means "interference present". The
//! detectors assume feature columns are already on comparable scales (see
//! [`crate::datagen::normalize_features`]); thresholding is left to ROC
//! analysis in [`crate::eval`].

pub mod adaboost;
pub mod forest;
pub mod gnb;
pub mod knn;
pub mod logreg;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use adaboost::AdaBoost;
pub use forest::{FeaturesPerSplit, RandomForest, RandomForestParams};
pub use gnb::GaussianNaiveBayes;
pub use knn::KNearestNeighbors;
pub use logreg::LogisticRegression;
pub use tree::{DecisionTree, DecisionTreeParams};

use crate::error::{Error, Result};

/// Common interface for sample-at-a-time detectors.
pub trait Detector {
    /// Short stable identifier used in artifact names and reports.
    fn name(&self) -> &'static str;
    /// Fits the detector on feature rows and binary labels.
    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()>;
    /// Scores one feature vector; higher means more likely jammed.
    fn score(&self, features: &[f64]) -> Result<f64>;
    /// Number of parameters adjusted by `fit` (0 for pure memorizers).
    fn trainable_parameters(&self) -> usize;
}

/// A fitted detector in a serializable envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrainedDetector {
    Logreg(LogisticRegression),
    Gnb(GaussianNaiveBayes),
    Tree(DecisionTree),
    Forest(RandomForest),
    Knn(KNearestNeighbors),
    Adaboost(AdaBoost),
}

impl TrainedDetector {
    /// Builds a detector with default hyperparameters from its short name.
    ///
    /// `seed` feeds randomized detectors (currently only `forest`).
    pub fn from_name(name: &str, seed: u64) -> Result<Self> {
        match name {
            "logreg" => Ok(Self::Logreg(LogisticRegression::default())),
            "gnb" => Ok(Self::Gnb(GaussianNaiveBayes::default())),
            "tree" => Ok(Self::Tree(DecisionTree::default())),
            "forest" => Ok(Self::Forest(RandomForest::new(RandomForestParams {
                seed,
                ..RandomForestParams::default()
            }))),
            "knn" => Ok(Self::Knn(KNearestNeighbors::default())),
            "adaboost" => Ok(Self::Adaboost(AdaBoost::default())),
            other => Err(Error::InvalidParameter(format!(
                "unknown detector '{other}'; expected one of \
                 logreg, gnb, tree, forest, knn, adaboost"
            ))),
        }
    }

    pub fn as_detector(&self) -> &dyn Detector {
        match self {
            Self::Logreg(m) => m,
            Self::Gnb(m) => m,
            Self::Tree(m) => m,
            Self::Forest(m) => m,
            Self::Knn(m) => m,
            Self::Adaboost(m) => m,
        }
    }

    pub fn as_detector_mut(&mut self) -> &mut dyn Detector {
        match self {
            Self::Logreg(m) => m,
            Self::Gnb(m) => m,
            Self::Tree(m) => m,
            Self::Forest(m) => m,
            Self::Knn(m) => m,
            Self::Adaboost(m) => m,
        }
    }
}

impl Detector for TrainedDetector {
    fn name(&self) -> &'static str {
        self.as_detector().name()
    }
    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        self.as_detector_mut().fit(features, labels)
    }
    fn score(&self, features: &[f64]) -> Result<f64> {
        self.as_detector().score(features)
    }
    fn trainable_parameters(&self) -> usize {
        self.as_detector().trainable_parameters()
    }
}

/// Short names accepted by [`TrainedDetector::from_name`], in report order.
pub const DETECTOR_NAMES: [&str; 6] = ["logreg", "gnb", "tree", "forest", "knn", "adaboost"];

/// Validates a training set and returns the feature dimension.
pub(crate) fn check_training_set(features: &[Vec<f64>], labels: &[bool]) -> Result<usize> {
    if features.is_empty() {
        return Err(Error::EmptyInput("training features".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::EmptyInput("feature vector".into()));
    }
    for (i, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("training feature row {i}")));
        }
    }
    if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    Ok(dim)
}

/// Validates one inference-time feature vector against the fitted dimension.
pub(crate) fn check_point(fitted_dim: Option<usize>, x: &[f64]) -> Result<usize> {
    let dim = fitted_dim.ok_or_else(|| Error::NotFitted("detector".into()))?;
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector".into()));
    }
    Ok(dim)
}

/// Numerically safe logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_from_name_covers_all_detectors() {
        for name in DETECTOR_NAMES {
            let model = TrainedDetector::from_name(name, 7).unwrap();
            assert_eq!(model.name(), name);
        }
        assert!(TrainedDetector::from_name("nope", 7).is_err());
    }

    #[test]
    fn test_tagged_serialization_reports_model_name() {
        let model = TrainedDetector::from_name("gnb", 0).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        assert!(json.contains("\"model\":\"gnb\""));
        let back: TrainedDetector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn test_training_set_checks() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(check_training_set(&x, &[true, false]).unwrap(), 2);
        assert!(matches!(
            check_training_set(&x, &[true, true]),
            Err(Error::SingleClass)
        ));
        assert!(check_training_set(&[], &[]).is_err());
        assert!(check_training_set(&x, &[true]).is_err());
        let ragged = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(check_training_set(&ragged, &[true, false]).is_err());
        let bad = vec![vec![0.0, f64::NAN], vec![1.0, 0.0]];
        assert!(check_training_set(&bad, &[true, false]).is_err());
    }

    #[test]
    fn test_point_checks() {
        assert!(check_point(None, &[0.0]).is_err());
        assert!(check_point(Some(2), &[0.0]).is_err());
        assert!(check_point(Some(2), &[0.0, f64::INFINITY]).is_err());
        assert_eq!(check_point(Some(2), &[0.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn test_sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(800.0) > 0.999);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    /// Shared smoke check: every detector must separate an easy 2-D problem.
    #[test]
    fn test_all_detectors_separate_easy_data() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let t = (i % 10) as f64 * 0.05;
            x.push(vec![1.0 + t, -1.0 - t]);
            y.push(true);
            x.push(vec![-1.0 - t, 1.0 + t]);
            y.push(false);
        }
        for name in DETECTOR_NAMES {
            let mut model = TrainedDetector::from_name(name, 7).unwrap();
            model.fit(&x, &y).unwrap();
            let pos = model.score(&[1.2, -1.2]).unwrap();
            let neg = model.score(&[-1.2, 1.2]).unwrap();
            assert!(
                pos > 0.5 && neg < 0.5,
                "{name}: pos={pos} neg={neg} should straddle 0.5"
            );
            assert!((0.0..=1.0).contains(&pos) && (0.0..=1.0).contains(&neg));
        }
    }
}
