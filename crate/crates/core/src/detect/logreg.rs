//! L2-regularized logistic regression fitted by batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{check_point, check_training_set, sigmoid, Detector};
use crate::error::{Error, Result};

/// Logistic regression with mean cross-entropy loss plus an L2 penalty on
/// the weights (the bias is not penalized).
///
/// Gradient descent halves the step size whenever a step would increase the
/// loss, so the recorded loss trace is non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticRegression {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
    weights: Vec<f64>,
    bias: f64,
    fitted: bool,
    /// Loss after each accepted step; kept out of artifacts.
    #[serde(skip)]
    pub(crate) loss_trace: Vec<f64>,
}

impl Default for LogisticRegression {
    fn default() -> Self {
        LogisticRegression {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
            weights: Vec::new(),
            bias: 0.0,
            fitted: false,
            loss_trace: Vec::new(),
        }
    }
}

/// Mean cross-entropy plus `l2/2 * ||w||^2`, and its gradient in
/// `(d_weights, d_bias)` order.
fn loss_and_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let p = sigmoid(z);
        let t = if label { 1.0 } else { 0.0 };
        // ln(p) and ln(1-p) via softplus for stability at extreme z.
        let softplus = |v: f64| {
            if v > 0.0 {
                v + (-v).exp().ln_1p()
            } else {
                v.exp().ln_1p()
            }
        };
        loss += if label { softplus(-z) } else { softplus(z) };
        let err = p - t;
        for (g, a) in grad_w.iter_mut().zip(row) {
            *g += err * a;
        }
        grad_b += err;
    }
    loss /= n;
    for g in &mut grad_w {
        *g /= n;
    }
    grad_b /= n;
    for (g, wi) in grad_w.iter_mut().zip(w) {
        *g += l2 * wi;
    }
    loss += 0.5 * l2 * w.iter().map(|wi| wi * wi).sum::<f64>();
    (loss, grad_w, grad_b)
}

impl LogisticRegression {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }
}

impl Detector for LogisticRegression {
    fn name(&self) -> &'static str {
        "logreg"
    }

    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        let dim = check_training_set(features, labels)?;
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "l2 must be non-negative, got {}",
                self.l2
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be > 0".into()));
        }

        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut lr = self.learning_rate;
        let (mut loss, mut grad_w, mut grad_b) = loss_and_gradient(features, labels, &w, b, self.l2);
        self.loss_trace = vec![loss];
        'steps: for _ in 0..self.iterations {
            loop {
                let cand_w: Vec<f64> = w.iter().zip(&grad_w).map(|(wi, g)| wi - lr * g).collect();
                let cand_b = b - lr * grad_b;
                let (cand_loss, cand_gw, cand_gb) =
                    loss_and_gradient(features, labels, &cand_w, cand_b, self.l2);
                if cand_loss <= loss {
                    w = cand_w;
                    b = cand_b;
                    loss = cand_loss;
                    grad_w = cand_gw;
                    grad_b = cand_gb;
                    self.loss_trace.push(loss);
                    break;
                }
                lr *= 0.5;
                if lr < 1e-12 {
                    // Step size exhausted: already at numerical convergence.
                    break 'steps;
                }
            }
        }
        self.weights = w;
        self.bias = b;
        self.fitted = true;
        Ok(())
    }

    fn score(&self, features: &[f64]) -> Result<f64> {
        check_point(self.fitted.then_some(self.weights.len()), features)?;
        let z = features
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.bias;
        Ok(sigmoid(z))
    }

    fn trainable_parameters(&self) -> usize {
        self.weights.len() + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_problem(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            x.push(vec![a, b]);
            y.push(a - 0.5 * b > 0.1);
        }
        if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
            y[0] = !y[0];
        }
        (x, y)
    }

    /// Central finite differences must reproduce the analytic gradient.
    #[test]
    fn test_gradient_matches_finite_differences() {
        let (x, y) = toy_problem(25, 3);
        let w = vec![0.3, -0.7];
        let b = 0.2;
        let l2 = 0.05;
        let (_, grad_w, grad_b) = loss_and_gradient(&x, &y, &w, b, l2);
        let h = 1e-6;
        for i in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let fp = loss_and_gradient(&x, &y, &wp, b, l2).0;
            let fm = loss_and_gradient(&x, &y, &wm, b, l2).0;
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (fd - grad_w[i]).abs() <= 1e-6 * (1.0 + grad_w[i].abs()),
                "weight {i}: fd={fd} analytic={}",
                grad_w[i]
            );
        }
        let fp = loss_and_gradient(&x, &y, &w, b + h, l2).0;
        let fm = loss_and_gradient(&x, &y, &w, b - h, l2).0;
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - grad_b).abs() <= 1e-6 * (1.0 + grad_b.abs()));
    }

    #[test]
    fn test_loss_trace_is_monotone_non_increasing() {
        let (x, y) = toy_problem(60, 5);
        let mut model = LogisticRegression {
            learning_rate: 5.0, // deliberately too large; halving must rescue it
            ..LogisticRegression::default()
        };
        model.fit(&x, &y).unwrap();
        for pair in model.loss_trace.windows(2) {
            assert!(pair[1] <= pair[0], "loss increased: {} -> {}", pair[0], pair[1]);
        }
        assert!(model.loss_trace.len() > 1);
    }

    #[test]
    fn test_separable_data_orders_scores_by_margin() {
        let x = vec![
            vec![-2.0],
            vec![-1.0],
            vec![1.0],
            vec![2.0],
        ];
        let y = vec![false, false, true, true];
        let mut model = LogisticRegression::default();
        model.fit(&x, &y).unwrap();
        let s: Vec<f64> = [-3.0, -1.0, 0.0, 1.0, 3.0]
            .iter()
            .map(|&v| model.score(&[v]).unwrap())
            .collect();
        for pair in s.windows(2) {
            assert!(pair[0] < pair[1], "scores must increase with the feature");
        }
        assert!(s[0] < 0.5 && s[4] > 0.5);
    }

    #[test]
    fn test_l2_shrinks_weights() {
        let (x, y) = toy_problem(80, 9);
        let mut weak = LogisticRegression {
            l2: 0.0,
            ..LogisticRegression::default()
        };
        let mut strong = LogisticRegression {
            l2: 1.0,
            ..LogisticRegression::default()
        };
        weak.fit(&x, &y).unwrap();
        strong.fit(&x, &y).unwrap();
        let norm = |m: &LogisticRegression| m.weights().iter().map(|w| w * w).sum::<f64>();
        assert!(norm(&strong) < norm(&weak));
    }

    #[test]
    fn test_fit_rejects_bad_inputs() {
        let (x, y) = toy_problem(10, 1);
        let mut model = LogisticRegression {
            learning_rate: -1.0,
            ..LogisticRegression::default()
        };
        assert!(model.fit(&x, &y).is_err());
        let mut model = LogisticRegression::default();
        assert!(model.fit(&x, &[true; 10]).is_err());
        assert!(model.score(&[0.0, 0.0]).is_err(), "unfitted model must error");
        model.fit(&x, &y).unwrap();
        assert!(model.score(&[0.0]).is_err(), "dimension mismatch must error");
    }

    #[test]
    fn test_round_trip_preserves_scores() {
        let (x, y) = toy_problem(40, 11);
        let mut model = LogisticRegression::default();
        model.fit(&x, &y).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: LogisticRegression = serde_json::from_str(&json).unwrap();
        for row in &x {
            assert_eq!(model.score(row).unwrap(), back.score(row).unwrap());
        }
    }
}
