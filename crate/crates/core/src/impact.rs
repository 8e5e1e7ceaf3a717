//! Closed-form posterior gaps showing when mislabeling changes the Naive Bayes
//! decision for a single binary feature observed as `X = 1`.
//!
//! Each gap compares `P(Y = a | X = 1)` with `P(Y = b | X = 1)` for observed
//! labels `Y`. The matching gap for true labels `Y*` is reported alongside, so
//! a sign disagreement means the noisy labels invert the decision.

use std::fmt;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::STOCHASTIC_TOL;

pub use crate::metrics::delta_acc;

/// Conditions under which a closed form was evaluated outside its derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactFlag {
    /// The diagonal entry does not exceed the off-diagonal one it is compared with.
    NotDiagonallyDominant,
    /// Two-class noise with `rho12 != 1 - rho11`; the closed form assumes symmetric flips.
    AsymmetricNoise,
    /// `rho` lies outside the range the closed form was derived for.
    RhoOutOfRange,
    /// Confusing-class case with `K - 1 <= rho / (1 - rho)`.
    OutsideRegime,
}

impl fmt::Display for ImpactFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ImpactFlag::NotDiagonallyDominant => "not_diagonally_dominant",
            ImpactFlag::AsymmetricNoise => "asymmetric_noise",
            ImpactFlag::RhoOutOfRange => "rho_out_of_range",
            ImpactFlag::OutsideRegime => "outside_regime",
        };
        f.write_str(s)
    }
}

/// A closed-form gap with its context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// The closed form's value.
    pub value: f64,
    /// `P(X = 1)` under the scenario.
    pub marginal_x1: f64,
    /// `P(Y* = a | X = 1) - P(Y* = b | X = 1)`.
    pub clean: f64,
    pub flags: Vec<ImpactFlag>,
}

impl Gap {
    /// Noisy labels favor the other class than clean labels would.
    pub fn is_inversion(&self) -> bool {
        self.value * self.clean < 0.0
    }
}

/// Priors, mislabeling matrix and one feature's per-class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactScenario {
    rho: Array2<f64>,
    p_column: Array1<f64>,
    priors: Array1<f64>,
}

impl ImpactScenario {
    pub fn new(rho: Array2<f64>, p_column: Array1<f64>, priors: Array1<f64>) -> Result<Self> {
        let k = priors.len();
        if k < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if rho.dim() != (k, k) || p_column.len() != k {
            return Err(Error::ShapeMismatch {
                what: "scenario classes",
                expected: k,
                found: p_column.len(),
            });
        }
        check_unit("feature probability", p_column.iter().copied(), true)?;
        check_unit("prior", priors.iter().copied(), false)?;
        check_unit("mislabeling probability", rho.iter().copied(), false)?;
        if (priors.sum() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParams("priors must sum to 1".into()));
        }
        if rho
            .columns()
            .into_iter()
            .any(|c| (c.sum() - 1.0).abs() > STOCHASTIC_TOL)
        {
            return Err(Error::InvalidParams(
                "mislabeling columns must sum to 1".into(),
            ));
        }
        Ok(Self {
            rho,
            p_column,
            priors,
        })
    }

    /// Equal priors and [`constant_rho_matrix`].
    pub fn constant_rho(k: usize, rho: f64, p_column: Array1<f64>) -> Result<Self> {
        Self::new(constant_rho_matrix(k, rho)?, p_column, uniform(k))
    }

    /// Equal priors, [`confusing_class_matrix`], `p_1` for class 1 and `p_2` for all others.
    pub fn confusing_class(k: usize, rho: f64, p_1: f64, p_2: f64) -> Result<Self> {
        let mut p = Array1::from_elem(k, p_2);
        p[0] = p_1;
        Self::new(confusing_class_matrix(k, rho)?, p, uniform(k))
    }

    pub fn k(&self) -> usize {
        self.priors.len()
    }

    pub fn rho(&self) -> &Array2<f64> {
        &self.rho
    }

    pub fn p_column(&self) -> &Array1<f64> {
        &self.p_column
    }

    pub fn priors(&self) -> &Array1<f64> {
        &self.priors
    }

    /// `P(X = 1) = Σ_k pi_k p_k`.
    pub fn marginal_x1(&self) -> f64 {
        self.priors.dot(&self.p_column)
    }

    /// `P(Y = a, X = 1) = Σ_k pi_k rho_ak p_k`.
    pub fn joint_observed_x1(&self, a: usize) -> f64 {
        (0..self.k())
            .map(|c| self.priors[c] * self.rho[[a, c]] * self.p_column[c])
            .sum()
    }

    /// `P(Y = a | X = 1) - P(Y = b | X = 1)`.
    pub fn observed_gap(&self, a: usize, b: usize) -> f64 {
        (self.joint_observed_x1(a) - self.joint_observed_x1(b)) / self.marginal_x1()
    }

    /// `P(Y* = a | X = 1) - P(Y* = b | X = 1)`.
    pub fn clean_gap(&self, a: usize, b: usize) -> f64 {
        (self.priors[a] * self.p_column[a] - self.priors[b] * self.p_column[b])
            / self.marginal_x1()
    }
}

fn uniform(k: usize) -> Array1<f64> {
    Array1::from_elem(k, 1.0 / k as f64)
}

fn check_unit(what: &str, values: impl Iterator<Item = f64>, open: bool) -> Result<()> {
    for v in values {
        let ok = if open {
            v > 0.0 && v < 1.0
        } else {
            (0.0..=1.0).contains(&v)
        };
        if !ok {
            let range = if open { "(0,1)" } else { "[0,1]" };
            return Err(Error::InvalidParams(format!("{what} {v} outside {range}")));
        }
    }
    Ok(())
}

/// `rho` on the diagonal and `(1 - rho) / (K - 1)` elsewhere.
pub fn constant_rho_matrix(k: usize, rho: f64) -> Result<Array2<f64>> {
    if k < 2 {
        return Err(Error::InvalidConfig("need at least two classes".into()));
    }
    check_unit("rho", std::iter::once(rho), false)?;
    let off = (1.0 - rho) / (k - 1) as f64;
    Ok(Array2::from_shape_fn((k, k), |(r, c)| if r == c { rho } else { off }))
}

/// Noise that only ever involves class 1: true class 1 is reported as class 2
/// with probability `1 - rho`, and every other true class is reported as class 1
/// with probability `1 - rho`.
pub fn confusing_class_matrix(k: usize, rho: f64) -> Result<Array2<f64>> {
    if k < 3 {
        return Err(Error::InvalidConfig("need at least three classes".into()));
    }
    check_unit("rho", std::iter::once(rho), false)?;
    let mut m = Array2::zeros((k, k));
    m[[0, 0]] = rho;
    m[[1, 0]] = 1.0 - rho;
    for c in 1..k {
        m[[c, c]] = rho;
        m[[0, c]] = 1.0 - rho;
    }
    Ok(m)
}

/// Two balanced classes with symmetric flips:
/// `0.5 (p_j1 - p_j2)(rho11 - rho12) / P(X = 1)`.
pub fn gap_two_class(p_j1: f64, p_j2: f64, rho11: f64, rho12: f64) -> Result<Gap> {
    check_unit("feature probability", [p_j1, p_j2].into_iter(), true)?;
    check_unit("rho", [rho11, rho12].into_iter(), false)?;
    let marginal_x1 = 0.5 * (p_j1 + p_j2);
    let mut flags = Vec::new();
    if rho11 <= rho12 {
        flags.push(ImpactFlag::NotDiagonallyDominant);
    }
    if (rho11 + rho12 - 1.0).abs() > 1e-12 {
        flags.push(ImpactFlag::AsymmetricNoise);
    }
    Ok(Gap {
        value: 0.5 * (p_j1 - p_j2) * (rho11 - rho12) / marginal_x1,
        marginal_x1,
        clean: 0.5 * (p_j1 - p_j2) / marginal_x1,
        flags,
    })
}

/// `K` balanced classes with constant mislabeling probability:
/// `(1/K)(p_k1 - p_k2)((K rho - 1)/(K - 1)) / P(X = 1)`.
///
/// `p_column` holds the feature's probability in every class, since `P(X = 1)`
/// depends on all of them; `k1` and `k2` pick the compared classes.
pub fn gap_constant_rho(rho: f64, p_column: &[f64], k1: usize, k2: usize) -> Result<Gap> {
    let k = p_column.len();
    if k < 3 {
        return Err(Error::InvalidConfig("need at least three classes".into()));
    }
    if k1 >= k || k2 >= k {
        return Err(Error::InvalidConfig(format!("classes {k1}, {k2} not below {k}")));
    }
    check_unit("feature probability", p_column.iter().copied(), true)?;
    check_unit("rho", std::iter::once(rho), false)?;
    let kf = k as f64;
    let marginal_x1 = p_column.iter().sum::<f64>() / kf;
    let mut flags = Vec::new();
    if !(rho > 0.5 && rho < 1.0) {
        flags.push(ImpactFlag::RhoOutOfRange);
    }
    if rho <= (1.0 - rho) / (kf - 1.0) {
        flags.push(ImpactFlag::NotDiagonallyDominant);
    }
    let diff = p_column[k1] - p_column[k2];
    Ok(Gap {
        value: (1.0 / kf) * diff * ((kf * rho - 1.0) / (kf - 1.0)) / marginal_x1,
        marginal_x1,
        clean: diff / kf / marginal_x1,
        flags,
    })
}

/// Confusing-class case with class 1 against any class `k > 2`:
/// `((1 - rho)/K) [ (rho/(1 - rho)) p_1 + (K - 1) p_2 - (rho/(1 - rho)) p_2 ]`.
///
/// This is the difference of joint probabilities `P(Y = 1, X = 1) - P(Y = k, X = 1)`;
/// divide by `marginal_x1` for the conditional gap. Both have the same sign.
pub fn gap_confusing_class(k: usize, rho: f64, p_1: f64, p_2: f64) -> Result<Gap> {
    if k < 3 {
        return Err(Error::InvalidConfig("need at least three classes".into()));
    }
    check_unit("feature probability", [p_1, p_2].into_iter(), true)?;
    check_unit("rho", std::iter::once(rho), false)?;
    if rho >= 1.0 {
        return Err(Error::InvalidParams("rho must be below 1".into()));
    }
    let kf = k as f64;
    let odds = rho / (1.0 - rho);
    let mut flags = Vec::new();
    if rho < 0.9 {
        flags.push(ImpactFlag::RhoOutOfRange);
    }
    if kf - 1.0 <= odds {
        flags.push(ImpactFlag::OutsideRegime);
        log::warn!("K = {k} is outside the confusing-class regime K - 1 > {odds:.3}");
    }
    let marginal_x1 = (p_1 + (kf - 1.0) * p_2) / kf;
    Ok(Gap {
        value: ((1.0 - rho) / kf) * (odds * p_1 + (kf - 1.0) * p_2 - odds * p_2),
        marginal_x1,
        clean: (p_1 - p_2) / kf / marginal_x1,
        flags,
    })
}
