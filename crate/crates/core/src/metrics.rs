//! Evaluation measures: parameter MSE, accuracy, one-vs-rest ROC curves and macro-AUC.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean squared difference between estimated and true feature probabilities.
///
/// `alignment[k]` names the estimated column that corresponds to true class `k`.
pub fn mse_params(p_hat: &Array2<f64>, p_true: &Array2<f64>, alignment: &[usize]) -> Result<f64> {
    if p_hat.dim() != p_true.dim() {
        return Err(Error::ShapeMismatch {
            what: "probability matrix",
            expected: p_true.len(),
            found: p_hat.len(),
        });
    }
    let k = p_true.ncols();
    let mut seen = alignment.to_vec();
    seen.sort_unstable();
    if seen != (0..k).collect::<Vec<_>>() {
        return Err(Error::InvalidConfig(format!(
            "alignment {alignment:?} is not a permutation of 0..{k}"
        )));
    }
    let mut total = 0.0;
    for j in 0..p_true.nrows() {
        for (c, &est) in alignment.iter().enumerate() {
            let diff = p_hat[[j, est]] - p_true[[j, c]];
            total += diff * diff;
        }
    }
    Ok(total / p_true.len() as f64)
}

/// Percentage of predictions equal to the gold labels.
pub fn accuracy(predicted: &[usize], gold: &[usize]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::ShapeMismatch {
            what: "prediction count",
            expected: gold.len(),
            found: predicted.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = predicted.iter().zip(gold).filter(|(a, b)| a == b).count();
    Ok(100.0 * hits as f64 / gold.len() as f64)
}

/// One-vs-rest ROC curve of a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRoc {
    pub class: usize,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
    pub points: Vec<(f64, f64)>,
    /// Area under `points` by the trapezoidal rule, in `[0, 1]`.
    pub auc: f64,
}

/// ROC points for binary `positive` flags ranked by `scores` (higher = more positive).
///
/// Tied scores cross the threshold together, which makes the trapezoidal area
/// equal to the tie-corrected Mann-Whitney statistic.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Vec<(f64, f64)> {
    let n_pos = positive.iter().filter(|p| **p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let threshold = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == threshold {
            if positive[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    points
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Macro-averaged one-vs-rest AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAuc {
    /// Unweighted mean of the per-class AUCs, as a percentage.
    pub value: f64,
    pub per_class: Vec<ClassRoc>,
    /// Classes with no positive or no negative example, left out of the mean.
    pub skipped: Vec<usize>,
}

/// Macro-AUC from an `n × K` score matrix (column `k` ranks class `k`).
///
/// Scores need only be monotone in the class posterior, so normalized
/// log-posteriors are as good as probabilities and do not saturate.
pub fn macro_auc(scores: &Array2<f64>, gold: &[usize]) -> Result<MacroAuc> {
    let (n, k) = scores.dim();
    if gold.len() != n {
        return Err(Error::ShapeMismatch {
            what: "gold labels",
            expected: n,
            found: gold.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = gold.iter().find(|&&g| g >= k) {
        return Err(Error::InvalidLabel { row: 0, label: bad + 1, k });
    }
    if gold.iter().all(|&g| g == gold[0]) {
        return Err(Error::UndefinedAuc(
            "every instance belongs to the same class".into(),
        ));
    }
    let mut per_class = Vec::new();
    let mut skipped = Vec::new();
    for c in 0..k {
        let positive: Vec<bool> = gold.iter().map(|&g| g == c).collect();
        let n_pos = positive.iter().filter(|p| **p).count();
        if n_pos == 0 || n_pos == n {
            skipped.push(c);
            continue;
        }
        let column: Vec<f64> = scores.column(c).to_vec();
        let points = roc_curve(&column, &positive);
        let auc = trapezoid_area(&points);
        per_class.push(ClassRoc {
            class: c,
            points,
            auc,
        });
    }
    let value = 100.0 * per_class.iter().map(|r| r.auc).sum::<f64>() / per_class.len() as f64;
    Ok(MacroAuc {
        value,
        per_class,
        skipped,
    })
}

/// Scores of one method on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method_name: String,
    /// Accuracy in percent.
    pub acc: f64,
    /// Parameter MSE (unscaled), when the true parameters are known.
    pub mse: Option<f64>,
    /// Macro-AUC in percent.
    pub macro_auc: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_class_roc: Vec<ClassRoc>,
    pub delta_acc: Option<f64>,
}

impl MetricsReport {
    /// Builds a report from predicted labels and an `n × K` score matrix.
    pub fn evaluate(
        method_name: impl Into<String>,
        predicted: &[usize],
        scores: &Array2<f64>,
        gold: &[usize],
    ) -> Result<Self> {
        let acc = accuracy(predicted, gold)?;
        let auc = macro_auc(scores, gold)?;
        Ok(Self {
            method_name: method_name.into(),
            acc,
            mse: None,
            macro_auc: auc.value,
            per_class_roc: auc.per_class,
            delta_acc: None,
        })
    }

    pub fn with_mse(mut self, mse: f64) -> Self {
        self.mse = Some(mse);
        self
    }

    /// Header of [`MetricsReport::delimited_row`].
    pub const DELIMITED_HEADER: &'static str = "method,mse_e3,acc,auc,delta_acc";

    /// `method,MSE×10³,ACC,AUC,ΔACC`, empty fields for missing values.
    pub fn delimited_row(&self) -> String {
        format!(
            "{},{},{:.4},{:.4},{}",
            self.method_name,
            self.mse.map(|m| format!("{:.4}", m * 1e3)).unwrap_or_default(),
            self.acc,
            self.macro_auc,
            self.delta_acc.map(|d| format!("{d:.4}")).unwrap_or_default(),
        )
    }
}

/// `ACC − ACC*`: accuracy with noisy training labels minus accuracy with clean ones.
pub fn delta_acc(acc_noisy: f64, acc_clean: f64) -> f64 {
    acc_noisy - acc_clean
}
