//! Random forest: bagged decision trees with per-split feature subsampling.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, DecisionTreeParams};
use super::{check_point, check_training_set, Detector};
use crate::datagen::splitmix64;
use crate::error::{Error, Result};

/// How many candidate features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// `max(1, floor(sqrt(d)))` features, the usual forest default.
    Sqrt,
    /// Every feature; with one tree and no bootstrap this reduces the
    /// forest to a plain decision tree.
    All,
    /// A fixed fraction of features, at least one.
    Fraction(f64),
}

impl FeaturesPerSplit {
    fn count(&self, dim: usize) -> Result<usize> {
        let k = match self {
            FeaturesPerSplit::Sqrt => (dim as f64).sqrt().floor() as usize,
            FeaturesPerSplit::All => dim,
            FeaturesPerSplit::Fraction(f) => {
                if !(0.0..=1.0).contains(f) {
                    return Err(Error::InvalidParameter(format!(
                        "feature fraction must be in [0, 1], got {f}"
                    )));
                }
                (f * dim as f64).floor() as usize
            }
        };
        Ok(k.clamp(1, dim))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub features_per_split: FeaturesPerSplit,
    /// Draw a bootstrap resample (n rows with replacement) per tree.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_trees: 100,
            max_depth: 8,
            min_samples_split: 2,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 42,
        }
    }
}

/// Bootstrap-aggregated decision trees; the score is the mean of the trees'
/// leaf probabilities.
///
/// Each tree gets its own generator seeded from `seed` and the tree index,
/// so fitting is deterministic and independent of tree build order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomForest {
    pub params: RandomForestParams,
    trees: Vec<DecisionTree>,
    dim: Option<usize>,
}

impl Default for RandomForest {
    fn default() -> Self {
        RandomForest::new(RandomForestParams::default())
    }
}

impl RandomForest {
    pub fn new(params: RandomForestParams) -> Self {
        RandomForest {
            params,
            trees: Vec::new(),
            dim: None,
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Detector for RandomForest {
    fn name(&self) -> &'static str {
        "forest"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        let dim = check_training_set(features, labels)?;
        if self.params.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be > 0".into()));
        }
        let per_split = self.params.features_per_split.count(dim)?;
        let n = features.len();

        self.trees.clear();
        for t in 0..self.params.n_trees {
            let mut rng =
                ChaCha8Rng::seed_from_u64(splitmix64(self.params.seed ^ (t as u64 + 1)));
            // Bootstrap as per-row multiplicity weights; rows drawn zero
            // times get weight 0 and cannot influence the tree.
            let mut weights = if self.params.bootstrap {
                let mut w = vec![0.0; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1.0;
                }
                w
            } else {
                vec![1.0; n]
            };
            // A resample can lose one class entirely; redraw deterministically.
            let mut redraws = 0;
            while !both_classes_weighted(labels, &weights) {
                redraws += 1;
                if redraws > 32 {
                    return Err(Error::SingleClass);
                }
                weights.iter_mut().for_each(|w| *w = 0.0);
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            }

            let mut tree = DecisionTree::new(DecisionTreeParams {
                max_depth: self.params.max_depth,
                min_samples_split: self.params.min_samples_split,
            });
            tree.fit_with_selector(features, labels, &weights, &mut |d| {
                if per_split >= d {
                    (0..d).collect()
                } else {
                    sample(&mut rng, d, per_split).into_vec()
                }
            })?;
            self.trees.push(tree);
        }
        self.dim = Some(dim);
        Ok(())
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(self.dim, features)?;
        let mut total = 0.0;
        for tree in &self.trees {
            total += tree.score(features)?;
        }
        Ok(total / self.trees.len() as f64)
    }

    fn trainable_parameters(&self) -> usize {
        self.trees.iter().map(|t| t.trainable_parameters()).sum()
    }
}

fn both_classes_weighted(labels: &[bool], weights: &[f64]) -> bool {
    let pos = labels
        .iter()
        .zip(weights)
        .any(|(&l, &w)| l && w > 0.0);
    let neg = labels
        .iter()
        .zip(weights)
        .any(|(&l, &w)| !l && w > 0.0);
    pos && neg
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn noisy_problem(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let label = rng.random_bool(0.5);
            let shift = if label { 0.8 } else { -0.8 };
            let row: Vec<f64> = (0..6)
                .map(|_| shift + rng.random_range(-2.0..2.0))
                .collect();
            x.push(row);
            y.push(label);
        }
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            y[0] = !y[0];
        }
        (x, y)
    }

    #[test]
    fn test_degenerate_forest_equals_plain_tree() {
        let (x, y) = noisy_problem(60, 4);
        let mut forest = RandomForest::new(RandomForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: FeaturesPerSplit::All,
            ..RandomForestParams::default()
        });
        forest.fit(&x, &y).unwrap();
        let mut tree = DecisionTree::default();
        tree.fit(&x, &y).unwrap();
        for row in &x {
            assert_eq!(forest.score(row).unwrap(), tree.score(row).unwrap());
        }
    }

    #[test]
    fn test_fraction_one_equals_all_features() {
        let (x, y) = noisy_problem(40, 8);
        let build = |features_per_split| {
            let mut f = RandomForest::new(RandomForestParams {
                n_trees: 5,
                features_per_split,
                ..RandomForestParams::default()
            });
            f.fit(&x, &y).unwrap();
            f
        };
        let all = build(FeaturesPerSplit::All);
        let frac = build(FeaturesPerSplit::Fraction(1.0));
        for row in &x {
            assert_eq!(all.score(row).unwrap(), frac.score(row).unwrap());
        }
    }

    #[test]
    fn test_same_seed_reproduces_different_seed_differs() {
        let (x, y) = noisy_problem(80, 6);
        let fit = |seed| {
            let mut f = RandomForest::new(RandomForestParams {
                n_trees: 10,
                seed,
                ..RandomForestParams::default()
            });
            f.fit(&x, &y).unwrap();
            f
        };
        let a = fit(1);
        let b = fit(1);
        let c = fit(2);
        assert_eq!(a, b);
        assert!(
            x.iter()
                .any(|r| a.score(r).unwrap() != c.score(r).unwrap()),
            "different seeds should give a different ensemble"
        );
    }

    #[test]
    fn test_trees_disagree_but_mean_stays_probability() {
        let (x, y) = noisy_problem(100, 7);
        let mut forest = RandomForest::new(RandomForestParams {
            n_trees: 20,
            ..RandomForestParams::default()
        });
        forest.fit(&x, &y).unwrap();
        let probe = &x[0];
        let votes: Vec<f64> = forest
            .trees()
            .iter()
            .map(|t| t.score(probe).unwrap())
            .collect();
        assert!(
            votes.windows(2).any(|p| p[0] != p[1]),
            "bootstrap + feature sampling should decorrelate trees"
        );
        let s = forest.score(probe).unwrap();
        assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn test_parameter_validation() {
        let (x, y) = noisy_problem(20, 9);
        let mut zero = RandomForest::new(RandomForestParams {
            n_trees: 0,
            ..RandomForestParams::default()
        });
        assert!(zero.fit(&x, &y).is_err());
        let mut bad_frac = RandomForest::new(RandomForestParams {
            features_per_split: FeaturesPerSplit::Fraction(1.5),
            ..RandomForestParams::default()
        });
        assert!(bad_frac.fit(&x, &y).is_err());
        let unfitted = RandomForest::default();
        assert!(unfitted.score(&[0.0; 6]).is_err());
    }

    #[test]
    fn test_round_trip_preserves_forest() {
        let (x, y) = noisy_problem(30, 11);
        let mut forest = RandomForest::new(RandomForestParams {
            n_trees: 3,
            ..RandomForestParams::default()
        });
        forest.fit(&x, &y).unwrap();
        let back: RandomForest =
            serde_json::from_str(&serde_json::to_string(&forest).unwrap()).unwrap();
        assert_eq!(back, forest);
    }
}
