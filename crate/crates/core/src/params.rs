//! Model parameters: class priors, Bernoulli feature probabilities and the
//! mislabeling matrix.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::math::dot;

/// Tolerance used when checking that probability vectors sum to one.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Parameters of the noisy-label Naive Bayes model.
///
/// * `pi[k]` is the prior of true class `k`.
/// * `p[[j, k]]` is `P(x_j = 1 | true class k)`.
/// * `rho[[a, b]]` is `P(observed label a | true class b)`, so every column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pi: Array1<f64>,
    p: Array2<f64>,
    rho: Array2<f64>,
}

impl ModelParams {
    pub fn new(pi: Array1<f64>, p: Array2<f64>, rho: Array2<f64>) -> Result<Self> {
        let k = pi.len();
        if k == 0 {
            return Err(Error::InvalidParams("no classes".into()));
        }
        if p.ncols() != k {
            return Err(Error::ShapeMismatch {
                what: "feature probability columns",
                expected: k,
                found: p.ncols(),
            });
        }
        if rho.dim() != (k, k) {
            return Err(Error::ShapeMismatch {
                what: "mislabeling matrix side",
                expected: k,
                found: if rho.nrows() != k { rho.nrows() } else { rho.ncols() },
            });
        }
        if pi.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParams(format!("priors outside [0,1]: {pi}")));
        }
        let total: f64 = pi.sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParams(format!("priors sum to {total}")));
        }
        if let Some(((j, c), v)) = p.indexed_iter().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidParams(format!(
                "p[{j}][{c}] = {v} is outside (0,1)"
            )));
        }
        if rho.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParams(
                "mislabeling probabilities outside [0,1]".into(),
            ));
        }
        for (c, col) in rho.columns().into_iter().enumerate() {
            let s: f64 = col.sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidParams(format!(
                    "mislabeling column {c} sums to {s}"
                )));
            }
        }
        Ok(Self { pi, p, rho })
    }

    /// Standard Naive Bayes parameters: `rho` is the identity.
    pub fn without_noise(pi: Array1<f64>, p: Array2<f64>) -> Result<Self> {
        let k = pi.len();
        Self::new(pi, p, Array2::eye(k))
    }

    pub(crate) fn from_parts_unchecked(pi: Array1<f64>, p: Array2<f64>, rho: Array2<f64>) -> Self {
        Self { pi, p, rho }
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn d(&self) -> usize {
        self.p.nrows()
    }

    pub fn pi(&self) -> &Array1<f64> {
        &self.pi
    }

    pub fn p(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn rho(&self) -> &Array2<f64> {
        &self.rho
    }

    pub fn into_parts(self) -> (Array1<f64>, Array2<f64>, Array2<f64>) {
        (self.pi, self.p, self.rho)
    }

    /// Moves latent class `c` to index `perm[c]`.
    ///
    /// Rows of `rho` index observed labels and are left alone; only the
    /// latent-class axis (priors, columns of `p` and `rho`) moves.
    pub fn permute_latent(&self, perm: &[usize]) -> Self {
        let k = self.k();
        let mut pi = Array1::zeros(k);
        let mut p = Array2::zeros(self.p.dim());
        let mut rho = Array2::zeros((k, k));
        for (old, &new) in perm.iter().enumerate() {
            pi[new] = self.pi[old];
            p.column_mut(new).assign(&self.p.column(old));
            rho.column_mut(new).assign(&self.rho.column(old));
        }
        Self { pi, p, rho }
    }

    /// Renames every class (latent and observed) by `perm`: old index `c` becomes `perm[c]`.
    pub fn relabel_all(&self, perm: &[usize]) -> Self {
        let latent = self.permute_latent(perm);
        let k = self.k();
        let mut rho = Array2::zeros((k, k));
        for (old, &new) in perm.iter().enumerate() {
            rho.row_mut(new).assign(&latent.rho.row(old));
        }
        Self { rho, ..latent }
    }

    /// True when every diagonal entry of `rho` strictly exceeds the rest of its column.
    pub fn is_diagonally_dominant(&self) -> bool {
        dominance_violations(&self.rho).is_empty()
    }

    /// Feature log-likelihood tables used by the E-step and prediction.
    pub(crate) fn log_tables(&self) -> LogTables {
        let (d, k) = self.p.dim();
        let mut weight = vec![0.0; d * k];
        let mut base = vec![0.0; k];
        for c in 0..k {
            let mut acc = 0.0;
            for j in 0..d {
                let pj = self.p[[j, c]];
                let ln_q = (-pj).ln_1p();
                weight[c * d + j] = pj.ln() - ln_q;
                acc += ln_q;
            }
            base[c] = acc;
        }
        LogTables { d, weight, base }
    }
}

/// Columns of `rho` whose diagonal does not strictly dominate.
pub fn dominance_violations(rho: &Array2<f64>) -> Vec<usize> {
    (0..rho.ncols())
        .filter(|&c| {
            let diag = rho[[c, c]];
            (0..rho.nrows()).any(|r| r != c && rho[[r, c]] >= diag)
        })
        .collect()
}

/// Precomputed feature log-likelihood terms: for a binary row `x`,
/// `Σ_j x_j ln p_jc + (1-x_j) ln(1-p_jc) = base[c] + Σ_j x_j weight[c, j]`.
pub(crate) struct LogTables {
    d: usize,
    /// Class-major `ln p - ln(1-p)`.
    weight: Vec<f64>,
    base: Vec<f64>,
}

impl LogTables {
    /// Writes the feature log-likelihood of `row` (0/1 as f64) under every class into `out`.
    pub(crate) fn feature_loglik(&self, row: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.base[c] + dot(row, &self.weight[c * self.d..(c + 1) * self.d]);
        }
    }
}

/// Copies a 0/1 row into `buf` as floats.
pub(crate) fn row_to_f64(row: &[u8], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend(row.iter().map(|&v| f64::from(v)));
}

/// Posterior over the true class for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRow {
    pub probabilities: Vec<f64>,
    /// Normalized log posterior; finite even when `probabilities` underflow to zero.
    pub log_probabilities: Vec<f64>,
    /// Arg-max class, ties broken toward the lowest index.
    pub predicted: usize,
}
