//! Standard Bernoulli Naive Bayes: estimation from observed labels,
//! prediction, and the complete-data log-likelihood.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{argmax, normalize_log_weights, NeumaierSum};
use crate::params::{ModelParams, PosteriorRow};

/// Default additive smoothing for [`fit_nb`].
pub const DEFAULT_SMOOTHING: f64 = 1.0;

/// Fits Naive Bayes treating the observed labels as correct (`rho` = identity).
///
/// With smoothing `s`, `pi_k = (n_k + s) / (n + K s)` and
/// `p_jk = (count(x_j = 1, y = k) + s) / (n_k + 2 s)`.
pub fn fit_nb(data: &LabeledDataset, smoothing: f64) -> Result<ModelParams> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing must be a finite non-negative number, got {smoothing}"
        )));
    }
    let (n, d, k) = (data.n(), data.d(), data.k());
    let mut class_count = vec![0usize; k];
    let mut on_count = Array2::<usize>::zeros((d, k));
    for (i, &y) in data.y_observed().iter().enumerate() {
        class_count[y] += 1;
        for (j, &x) in data.row(i).iter().enumerate() {
            if x == 1 {
                on_count[[j, y]] += 1;
            }
        }
    }

    let pi = Array1::from_iter(
        class_count
            .iter()
            .map(|&c| (c as f64 + smoothing) / (n as f64 + k as f64 * smoothing)),
    );
    let mut p = Array2::zeros((d, k));
    for ((j, c), value) in p.indexed_iter_mut() {
        let v = (on_count[[j, c]] as f64 + smoothing) / (class_count[c] as f64 + 2.0 * smoothing);
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::BoundaryProbability {
                feature: j,
                class: c,
                value: v,
            });
        }
        *value = v;
    }
    ModelParams::without_noise(pi, p)
}

/// Posterior over the true class from features alone, `∝ pi_k Π_j p_jk^x (1-p_jk)^(1-x)`.
///
/// `rho` plays no part: at prediction time there is no observed label.
pub fn posterior_true_label(params: &ModelParams, x_row: ArrayView1<'_, u8>) -> Result<PosteriorRow> {
    if x_row.len() != params.d() {
        return Err(Error::ShapeMismatch {
            what: "feature row",
            expected: params.d(),
            found: x_row.len(),
        });
    }
    let tables = params.log_tables();
    Ok(posterior_with_tables(params, &tables, x_row))
}

fn posterior_with_tables(
    params: &ModelParams,
    tables: &crate::params::LogTables,
    x_row: ArrayView1<'_, u8>,
) -> PosteriorRow {
    let k = params.k();
    let mut log_w = vec![0.0; k];
    let xf: Vec<f64> = x_row.iter().map(|&v| f64::from(v)).collect();
    tables.feature_loglik(&xf, &mut log_w);
    for (lw, pi) in log_w.iter_mut().zip(params.pi()) {
        *lw += pi.ln();
    }
    let mut probabilities = vec![0.0; k];
    let lse = normalize_log_weights(&log_w, &mut probabilities);
    let log_probabilities: Vec<f64> = log_w.iter().map(|l| l - lse).collect();
    let predicted = argmax(&log_probabilities);
    PosteriorRow {
        probabilities,
        log_probabilities,
        predicted,
    }
}

/// [`posterior_true_label`] for every row of `x`, computed in parallel.
pub fn predict_batch(params: &ModelParams, x: &Array2<u8>) -> Result<Vec<PosteriorRow>> {
    if x.ncols() != params.d() {
        return Err(Error::ShapeMismatch {
            what: "feature columns",
            expected: params.d(),
            found: x.ncols(),
        });
    }
    let tables = params.log_tables();
    Ok((0..x.nrows())
        .into_par_iter()
        .map(|i| posterior_with_tables(params, &tables, x.row(i)))
        .collect())
}

/// Value of the complete-data log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompleteLoglik {
    pub value: f64,
    /// First row whose (observed, true) pair has zero mislabeling probability.
    /// When set, `value` is negative infinity.
    pub zero_probability_row: Option<usize>,
}

/// `Σ_i [ln pi_{y*_i} + ln rho_{y_i, y*_i} + Σ_j x_ij ln p_{j,y*_i} + (1-x_ij) ln(1-p_{j,y*_i})]`.
pub fn complete_loglik(params: &ModelParams, data: &LabeledDataset) -> Result<CompleteLoglik> {
    let y_true = data
        .y_true()
        .ok_or_else(|| Error::InvalidConfig("complete log-likelihood needs true labels".into()))?;
    check_shapes(params, data)?;
    let mut total = NeumaierSum::default();
    for (i, (&y, &t)) in data.y_observed().iter().zip(y_true).enumerate() {
        let rho = params.rho()[[y, t]];
        if rho == 0.0 {
            return Ok(CompleteLoglik {
                value: f64::NEG_INFINITY,
                zero_probability_row: Some(i),
            });
        }
        let mut row = params.pi()[t].ln() + rho.ln();
        for (j, &x) in data.row(i).iter().enumerate() {
            let pj = params.p()[[j, t]];
            row += if x == 1 { pj.ln() } else { (-pj).ln_1p() };
        }
        total.add(row);
    }
    Ok(CompleteLoglik {
        value: total.value(),
        zero_probability_row: None,
    })
}

pub(crate) fn check_shapes(params: &ModelParams, data: &LabeledDataset) -> Result<()> {
    if params.k() != data.k() {
        return Err(Error::ShapeMismatch {
            what: "class count",
            expected: params.k(),
            found: data.k(),
        });
    }
    if params.d() != data.d() {
        return Err(Error::ShapeMismatch {
            what: "binary feature count",
            expected: params.d(),
            found: data.d(),
        });
    }
    Ok(())
}
