//! CART-style binary decision tree with Gini impurity and sample weights.

use serde::{Deserialize, Serialize};

use super::{check_point, check_training_set, Detector};
use crate::error::{Error, Result};

/// Minimum impurity decrease for a split to be accepted.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for DecisionTreeParams {
    fn default() -> Self {
        DecisionTreeParams {
            max_depth: 8,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TreeNode {
    Leaf {
        prob_pos: f64,
    },
    /// Rows with `feature <= threshold` descend to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Greedy binary classification tree.
///
/// Splits are exhaustive: every feature and every midpoint between distinct
/// consecutive values is scored by weighted Gini impurity decrease. Ties
/// keep the lowest feature index, then the lowest threshold, which makes
/// fitting fully deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecisionTree {
    pub params: DecisionTreeParams,
    nodes: Vec<TreeNode>,
    dim: Option<usize>,
}

impl Default for DecisionTree {
    fn default() -> Self {
        DecisionTree {
            params: DecisionTreeParams::default(),
            nodes: Vec::new(),
            dim: None,
        }
    }
}

fn gini(w_pos: f64, w_total: f64) -> f64 {
    if w_total <= 0.0 {
        return 0.0;
    }
    let p = w_pos / w_total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Best `(gain, feature, threshold)` over the candidate features, or `None`
/// when no boundary between distinct values exists.
fn best_split(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    idx: &[usize],
    candidates: &[usize],
) -> Option<(f64, usize, f64)> {
    let w_total: f64 = idx.iter().map(|&i| w[i]).sum();
    let w_pos: f64 = idx.iter().filter(|&&i| y[i]).map(|&i| w[i]).sum();
    let parent = gini(w_pos, w_total);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut order = idx.to_vec();
    for &f in candidates {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let mut wl = 0.0;
        let mut wl_pos = 0.0;
        for pair in 0..order.len() - 1 {
            let i = order[pair];
            wl += w[i];
            if y[i] {
                wl_pos += w[i];
            }
            let lo = x[i][f];
            let hi = x[order[pair + 1]][f];
            if lo == hi {
                continue;
            }
            let wr = w_total - wl;
            let wr_pos = w_pos - wl_pos;
            let children = (wl * gini(wl_pos, wl) + wr * gini(wr_pos, wr)) / w_total;
            let gain = parent - children;
            let threshold = lo + 0.5 * (hi - lo);
            if best.map_or(true, |(g, _, _)| gain > g) {
                best = Some((gain, f, threshold));
            }
        }
    }
    best
}

fn build_node(
    nodes: &mut Vec<TreeNode>,
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    idx: Vec<usize>,
    depth: usize,
    params: &DecisionTreeParams,
    selector: &mut dyn FnMut(usize) -> Vec<usize>,
) -> usize {
    let w_total: f64 = idx.iter().map(|&i| w[i]).sum();
    let w_pos: f64 = idx.iter().filter(|&&i| y[i]).map(|&i| w[i]).sum();
    let prob_pos = if w_total > 0.0 { w_pos / w_total } else { 0.5 };

    let node_id = nodes.len();
    nodes.push(TreeNode::Leaf { prob_pos });

    let pure = w_pos == 0.0 || w_pos == w_total;
    if pure || depth >= params.max_depth || idx.len() < params.min_samples_split {
        return node_id;
    }
    let mut candidates = selector(x[0].len());
    candidates.sort_unstable();
    candidates.dedup();
    let Some((gain, feature, threshold)) = best_split(x, y, w, &idx, &candidates) else {
        return node_id;
    };
    if gain <= MIN_GAIN {
        return node_id;
    }
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.into_iter().partition(|&i| x[i][feature] <= threshold);
    let left = build_node(nodes, x, y, w, left_idx, depth + 1, params, selector);
    let right = build_node(nodes, x, y, w, right_idx, depth + 1, params, selector);
    nodes[node_id] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    node_id
}

impl DecisionTree {
    pub fn new(params: DecisionTreeParams) -> Self {
        DecisionTree {
            params,
            ..DecisionTree::default()
        }
    }

    /// Fits with per-row sample weights (used directly by boosting/bagging).
    pub fn fit_weighted(
        &mut self,
        features: &[Vec<f64>],
        labels: &[bool],
        weights: &[f64],
    ) -> Result<()> {
        self.fit_with_selector(features, labels, weights, &mut |dim| (0..dim).collect())
    }

    /// Fits with a per-split candidate-feature selector (used by the random
    /// forest to subsample features at each split).
    pub(crate) fn fit_with_selector(
        &mut self,
        features: &[Vec<f64>],
        labels: &[bool],
        weights: &[f64],
        selector: &mut dyn FnMut(usize) -> Vec<usize>,
    ) -> Result<()> {
        let dim = check_training_set(features, labels)?;
        if weights.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: weights.len(),
            });
        }
        if weights.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidParameter(
                "sample weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter(
                "sample weights must not all be zero".into(),
            ));
        }
        self.nodes.clear();
        build_node(
            &mut self.nodes,
            features,
            labels,
            weights,
            (0..features.len()).collect(),
            0,
            &self.params,
            selector,
        );
        self.dim = Some(dim);
        Ok(())
    }

    /// Number of internal split nodes.
    pub fn split_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Split { .. }))
            .count()
    }

    /// Number of leaves.
    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.split_count()
    }
}

impl Detector for DecisionTree {
    fn name(&self) -> &'static str {
        "tree"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        let weights = vec![1.0; features.len()];
        self.fit_weighted(features, labels, &weights)
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(self.dim, features)?;
        let mut at = 0usize;
        for _ in 0..=self.nodes.len() {
            match self.nodes[at] {
                TreeNode::Leaf { prob_pos } => return Ok(prob_pos),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[feature] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
        unreachable!("tree walk exceeded node count; tree is corrupt")
    }

    fn trainable_parameters(&self) -> usize {
        // Each split stores (feature, threshold); each leaf one probability.
        2 * self.split_count() + self.leaf_count()
    }
}
