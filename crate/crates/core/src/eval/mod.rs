//! Detector evaluation: ROC analysis, stratified splits with
//! cross-validation, timing, and report/export helpers.

pub mod bench;
pub mod roc;
pub mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use bench::{median_duration, time_stats, TimingStats, DEFAULT_TIMING_REPS};
pub use roc::{
    confusion_at, roc_curve, youden_threshold, ConfusionMatrix, RocCurve, RocPoint, YoudenResult,
};
pub use split::{split_and_cv, SplitAssignments, SplitConfig};

use crate::error::{Error, Result};

/// ROC summary of one score set: curve area, the Youden operating point, and
/// the confusion matrix at that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub n_pos: usize,
    pub n_neg: usize,
    pub auc: f64,
    pub youden: YoudenResult,
    pub confusion_at_youden: ConfusionMatrix,
}

/// Training/inference wall-clock summary attached to a report on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTiming {
    pub fit_ms: f64,
    pub score_per_sample_us: f64,
    pub timing_reps: usize,
}

/// Full evaluation record for one detector, suitable for JSON artifacts.
///
/// `timing` defaults to `None` so that artifacts are byte-identical across
/// runs with the same seed and configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvalReport {
    pub model: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub trainable_parameters: usize,
    pub pooled: CurveSummary,
    /// Per-scenario summaries keyed by scenario id; see
    /// [`per_scenario_curves`] for how negatives are pooled.
    pub per_scenario: BTreeMap<String, CurveSummary>,
    pub fold_aucs: Vec<f64>,
    pub fold_auc_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<EvalTiming>,
}

/// Builds the ROC summary and full curve for one score set.
pub fn summarize_scores(scores: &[f64], labels: &[bool]) -> Result<(CurveSummary, RocCurve)> {
    let curve = roc_curve(scores, labels)?;
    let youden = youden_threshold(&curve)?;
    let confusion = confusion_at(scores, labels, youden.threshold)?;
    let summary = CurveSummary {
        n_pos: labels.iter().filter(|&&l| l).count(),
        n_neg: labels.iter().filter(|&&l| !l).count(),
        auc: curve.auc,
        youden,
        confusion_at_youden: confusion,
    };
    Ok((summary, curve))
}

/// Per-scenario ROC summaries from pooled test scores.
///
/// Each scenario is scored with its own positives against the negatives of
/// **all** scenarios pooled together: the no-interference baseline is drawn
/// from one distribution, so pooling gives every scenario the same, larger
/// negative sample and smoother curves.
pub fn per_scenario_curves(
    scores: &[f64],
    labels: &[bool],
    scenario_ids: &[String],
) -> Result<BTreeMap<String, (CurveSummary, RocCurve)>> {
    if scores.len() != labels.len() || scores.len() != scenario_ids.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len().min(scenario_ids.len()),
        });
    }
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut scenarios: Vec<&String> = scenario_ids.iter().collect();
    scenarios.sort_unstable();
    scenarios.dedup();

    let mut out = BTreeMap::new();
    for scenario in scenarios {
        let pos: Vec<usize> = (0..labels.len())
            .filter(|&i| labels[i] && &scenario_ids[i] == scenario)
            .collect();
        if pos.is_empty() {
            continue;
        }
        let mut s = Vec::with_capacity(pos.len() + neg.len());
        let mut l = Vec::with_capacity(pos.len() + neg.len());
        for &i in pos.iter().chain(neg.iter()) {
            s.push(scores[i]);
            l.push(labels[i]);
        }
        out.insert(scenario.clone(), summarize_scores(&s, &l)?);
    }
    Ok(out)
}

/// Runs k-fold cross-validation and returns per-fold AUCs plus their mean.
///
/// `fit_and_score` receives (training row indices, validation row indices)
/// and must return validation (scores, labels); this keeps the helper
/// independent of any particular detector type.
pub fn cross_validate_auc<F>(
    assignments: &SplitAssignments,
    mut fit_and_score: F,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[usize], &[usize]) -> Result<(Vec<f64>, Vec<bool>)>,
{
    let mut fold_aucs = Vec::with_capacity(assignments.folds.len());
    for fold in 0..assignments.folds.len() {
        let train = assignments.train_without_fold(fold);
        let val = &assignments.folds[fold];
        let (scores, labels) = fit_and_score(&train, val)?;
        fold_aucs.push(roc_curve(&scores, &labels)?.auc);
    }
    let mean = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    Ok((fold_aucs, mean))
}

/// Serializes an ROC curve as `threshold,fpr,tpr` CSV text.
pub fn roc_to_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

const SVG_PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Renders one or more named ROC curves as a standalone SVG document.
pub fn roc_to_svg(curves: &[(String, &RocCurve)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 560.0;
    const ML: f64 = 60.0; // left margin
    const MT: f64 = 20.0; // top margin
    const PW: f64 = 520.0; // plot width
    const PH: f64 = 440.0; // plot height
    let x = |fpr: f64| ML + fpr * PW;
    let y = |tpr: f64| MT + (1.0 - tpr) * PH;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Grid and tick labels every 0.25.
    for i in 0..=4 {
        let f = i as f64 * 0.25;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>\n",
            x(f),
            y(0.0),
            x(f),
            y(1.0)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#ddd\"/>\n",
            x(0.0),
            y(f),
            x(1.0),
            y(f)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{f:.2}</text>\n",
            x(f),
            y(0.0) + 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{f:.2}</text>\n",
            x(0.0) - 6.0,
            y(f) + 4.0
        ));
    }
    // Chance diagonal and axis titles.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\" \
         stroke-dasharray=\"4 4\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">False positive rate</text>\n",
        x(0.5),
        y(0.0) + 36.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">\
         True positive rate</text>\n",
        y(0.5),
        y(0.5)
    ));

    for (k, (name, curve)) in curves.iter().enumerate() {
        let color = SVG_PALETTE[k % SVG_PALETTE.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        let ly = MT + 16.0 + 16.0 * k as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n",
            x(0.55),
            x(0.55) + 24.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{name} (AUC {:.4})</text>\n",
            x(0.55) + 30.0,
            ly + 4.0,
            curve.auc
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// One row of the runtime comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub model: String,
    pub train_ms: f64,
    pub inference_us_per_window: f64,
}

/// Formats training/inference runtimes as a markdown table.
pub fn runtime_table_markdown(rows: &[RuntimeRow]) -> String {
    let mut out = String::from(
        "| Model | Training (ms) | Inference per window (us) |\n|---|---:|---:|\n",
    );
    for row in rows {
        out.push_str(&format!(
            "| {} | {:.1} | {:.2} |\n",
            row.model, row.train_ms, row.inference_us_per_window
        ));
    }
    out
}
