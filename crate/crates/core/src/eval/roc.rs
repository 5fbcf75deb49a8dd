//! ROC curves, trapezoidal AUC, Youden's J threshold and confusion counts.
//!
//! A detector decides "jammed" when `score > threshold`. The ROC sweep
//! walks every distinct score from high to low, then closes the curve with
//! an everything-positive sentinel at negative infinity, so tied scores
//! produce the diagonal segments the trapezoid rule expects.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod lossless_f64 {
    //! Serializes f64 through its shortest round-trip string so that
    //! non-finite sentinels survive JSON.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One operating point of a ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Decision threshold producing this point (`-inf` accepts everything).
    #[serde(with = "lossless_f64")]
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// A full ROC sweep with its trapezoidal area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Operating point chosen by maximizing Youden's J = TPR - FPR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenResult {
    #[serde(with = "lossless_f64")]
    pub threshold: f64,
    pub j: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Binary confusion counts at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn tpr(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            return 0.0;
        }
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn fpr(&self) -> f64 {
        if self.fp + self.tn == 0 {
            return 0.0;
        }
        self.fp as f64 / (self.fp + self.tn) as f64
    }
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores".into()));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    Ok((positives, negatives))
}

/// Builds the ROC curve and its trapezoidal AUC.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (positives, negatives) = check_scores(scores, labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Everything counted so far scores strictly above `threshold`.
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
        // Absorb the whole tie group at this score.
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });

    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

/// Picks the threshold maximizing Youden's J; ties resolve to the lowest
/// threshold, favoring recall.
pub fn youden_threshold(curve: &RocCurve) -> Result<YoudenResult> {
    if curve.points.is_empty() {
        return Err(Error::EmptyInput("roc curve".into()));
    }
    let mut best: Option<YoudenResult> = None;
    for p in &curve.points {
        let j = p.tpr - p.fpr;
        let replace = match &best {
            None => true,
            // Points arrive in descending-threshold order, so replacing on a
            // tie walks the threshold down.
            Some(b) => j >= b.j,
        };
        if replace {
            best = Some(YoudenResult {
                threshold: p.threshold,
                j,
                tpr: p.tpr,
                fpr: p.fpr,
            });
        }
    }
    Ok(best.expect("curve has points"))
}

/// Confusion counts when predicting positive for `score > threshold`.
pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionMatrix> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    let mut m = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => m.tp += 1,
            (true, false) => m.fp += 1,
            (false, false) => m.tn += 1,
            (false, true) => m.fn_ += 1,
        }
    }
    Ok(m)
}
