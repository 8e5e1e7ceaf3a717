//! Synthetic-data protocol: random true parameters, latent-label sampling,
//! label corruption through `rho`, train/test splitting and the replication study.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::dataset::{LabeledDataset, MixedDataset};
use crate::gaussian::{fit_inb_mixed, fit_nb_mixed, predict_batch_mixed, GaussianParams};
use crate::em::{e_step, fit_inb, random_dominant_columns, EmConfig};
use crate::error::{Error, Result};
use crate::metrics::{mse_params, MetricsReport};
use crate::nb::{fit_nb, predict_batch, DEFAULT_SMOOTHING};
use crate::params::ModelParams;
use crate::rng::{stream, Purpose};

/// Bounds applied to generated feature probabilities.
pub const P_CLAMP: (f64, f64) = (0.01, 0.99);

/// Half-open interval `[lo, hi)` for the diagonal of `rho`; `lo == hi` is a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RhoInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let point_one = lo == 1.0 && hi == 1.0;
        if !(point_one || (lo > 0.5 && lo <= hi && hi <= 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "rho interval [{lo}, {hi}) must satisfy 0.5 < lo <= hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn is_noiseless(&self) -> bool {
        self.lo == 1.0
    }

    /// The five intervals of the published simulation grid.
    pub fn standard_grid() -> Vec<RhoInterval> {
        [(0.55, 0.65), (0.65, 0.75), (0.75, 0.85), (0.85, 0.95), (1.0, 1.0)]
            .into_iter()
            .map(|(lo, hi)| RhoInterval { lo, hi })
            .collect()
    }
}

impl fmt::Display for RhoInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "[{:.2},{:.2}]", self.lo, self.hi)
        } else {
            write!(f, "[{:.2},{:.2})", self.lo, self.hi)
        }
    }
}

impl FromStr for RhoInterval {
    type Err = Error;

    /// Parses `lo:hi`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected lo:hi, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{v:?}: {e}")))
        };
        RhoInterval::new(parse(lo)?, parse(hi)?)
    }
}

/// Class prior scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priors {
    /// `1/K` each.
    Balanced,
    /// Class 1 three times as likely as each other class.
    Unbalanced,
}

impl Priors {
    pub fn vector(&self, k: usize) -> Array1<f64> {
        match self {
            Priors::Balanced => Array1::from_elem(k, 1.0 / k as f64),
            Priors::Unbalanced => {
                let unit = 1.0 / (k as f64 + 2.0);
                let mut pi = Array1::from_elem(k, unit);
                pi[0] = 3.0 * unit;
                pi
            }
        }
    }
}

/// How the off-diagonal mass `1 - rho_kk` of each true-label column is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffDiagonalScheme {
    /// Stick breaking over the other rows in a random order: each takes a
    /// uniform share of what is left and the last row takes the remainder.
    /// Columns tend to have one dominant confuser.
    #[default]
    Sequential,
    /// Independent uniforms rescaled to the remaining mass; spreads the noise evenly.
    Normalized,
}

/// A simulation cell: sizes, noise level and replication count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDesign {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub rho_interval: RhoInterval,
    pub priors: Priors,
    #[serde(default)]
    pub off_diagonal: OffDiagonalScheme,
    pub test_fraction: f64,
    pub replications: usize,
    pub seed: u64,
    /// Additive smoothing of the Naive Bayes baselines.
    pub smoothing: f64,
    pub em_max_iter: usize,
    pub em_tol: f64,
    pub em_restarts: usize,
    pub em_rho_diag_floor: f64,
}

impl Default for SimDesign {
    fn default() -> Self {
        let em = EmConfig::default();
        Self {
            n: 1000,
            d: 500,
            k: 5,
            rho_interval: RhoInterval { lo: 0.55, hi: 0.65 },
            priors: Priors::Balanced,
            off_diagonal: OffDiagonalScheme::default(),
            test_fraction: 0.2,
            replications: 20,
            seed: 2024,
            smoothing: DEFAULT_SMOOTHING,
            em_max_iter: em.max_iter,
            em_tol: em.tol,
            em_restarts: em.restarts,
            em_rho_diag_floor: em.rho_diag_floor,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        RhoInterval::new(self.rho_interval.lo, self.rho_interval.hi)?;
        if self.k < 2 || self.d == 0 {
            return Err(Error::InvalidConfig("need k >= 2 and d >= 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig("test_fraction must lie in (0,1)".into()));
        }
        let n_test = self.test_size();
        if n_test == 0 || self.n - n_test < self.k {
            return Err(Error::InvalidConfig(format!(
                "n = {} leaves too few training or test instances",
                self.n
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be positive".into()));
        }
        self.em_config(self.seed).validate()
    }

    pub fn test_size(&self) -> usize {
        (self.test_fraction * self.n as f64).round() as usize
    }

    pub fn em_config(&self, seed: u64) -> EmConfig {
        EmConfig {
            max_iter: self.em_max_iter,
            tol: self.em_tol,
            seed,
            restarts: self.em_restarts,
            rho_diag_floor: self.em_rho_diag_floor,
            ..EmConfig::default()
        }
    }
}

/// Draws true parameters: priors from the design, `p_jk = U[0, 0.1) + N(0.65, 0.06)`
/// clamped into `[0.01, 0.99]`, and `rho` columns with diagonal uniform on the
/// design interval and the remainder split by the design's [`OffDiagonalScheme`].
pub fn gen_true_params(design: &SimDesign, seed: u64) -> Result<ModelParams> {
    let mut rng = stream(seed, Purpose::Simulation, 0);
    gen_true_params_with(design, &mut rng)
}

pub(crate) fn gen_true_params_with<R: Rng>(design: &SimDesign, rng: &mut R) -> Result<ModelParams> {
    let (d, k) = (design.d, design.k);
    let normal = Normal::new(0.65, 0.06).expect("valid normal");
    let mut p = Array2::zeros((d, k));
    for v in p.iter_mut() {
        let u: f64 = rng.random_range(0.0..0.1);
        let z: f64 = normal.sample(rng);
        *v = (u + z).clamp(P_CLAMP.0, P_CLAMP.1);
    }
    let interval = design.rho_interval;
    let rho = if interval.is_noiseless() {
        Array2::eye(k)
    } else {
        match design.off_diagonal {
            OffDiagonalScheme::Sequential => stick_breaking_columns(rng, k, interval),
            OffDiagonalScheme::Normalized => {
                random_dominant_columns(rng, k, interval.lo..interval.hi)
            }
        }
    };
    ModelParams::new(design.priors.vector(k), p, rho)
}

fn stick_breaking_columns<R: Rng>(rng: &mut R, k: usize, interval: RhoInterval) -> Array2<f64> {
    let mut rho = Array2::zeros((k, k));
    for c in 0..k {
        let diag = rng.random_range(interval.lo..interval.hi);
        rho[[c, c]] = diag;
        let mut others: Vec<usize> = (0..k).filter(|&r| r != c).collect();
        others.shuffle(rng);
        let mut rest = 1.0 - diag;
        for (idx, &r) in others.iter().enumerate() {
            let share = if idx + 1 == others.len() {
                rest
            } else {
                rest * rng.random::<f64>()
            };
            rho[[r, c]] = share;
            rest -= share;
        }
    }
    rho
}

/// Samples `n` instances: `y* ~ Cat(pi)`, `x_j ~ Bernoulli(p_{j,y*})`,
/// `y ~ Cat(rho[·, y*])`. True labels are kept.
pub fn gen_dataset(params: &ModelParams, n: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = stream(seed, Purpose::Simulation, 1);
    gen_dataset_with(params, n, &mut rng)
}

pub(crate) fn gen_dataset_with<R: Rng>(
    params: &ModelParams,
    n: usize,
    rng: &mut R,
) -> Result<LabeledDataset> {
    let (d, k) = (params.d(), params.k());
    let class_dist = WeightedIndex::new(params.pi().iter().copied())
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let label_dists = (0..k)
        .map(|c| {
            WeightedIndex::new(params.rho().column(c).iter().copied())
                .map_err(|e| Error::InvalidParams(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Array2::<u8>::zeros((n, d));
    let mut y_true = Vec::with_capacity(n);
    let mut y_observed = Vec::with_capacity(n);
    for i in 0..n {
        let t = class_dist.sample(rng);
        for j in 0..d {
            x[[i, j]] = u8::from(rng.random::<f64>() < params.p()[[j, t]]);
        }
        y_true.push(t);
        y_observed.push(label_dists[t].sample(rng));
    }
    LabeledDataset::new(x, y_observed, Some(y_true), k)
}

/// One generated replication: the truth, a noisy training set and a clean test set.
#[derive(Debug, Clone)]
pub struct SimInstance {
    pub true_params: ModelParams,
    /// Observed labels are noisy; true labels retained.
    pub train: LabeledDataset,
    /// Observed labels equal the true labels.
    pub test: LabeledDataset,
    /// Seed handed to EM for this replication.
    pub em_seed: u64,
}

/// Generates replication `replication` of `design`. Each replication reads its
/// own stream, so replications can be produced in any order or in parallel.
pub fn generate_instance(design: &SimDesign, replication: usize) -> Result<SimInstance> {
    design.validate()?;
    let mut rng = stream(design.seed, Purpose::Replication, replication as u64);
    let true_params = gen_true_params_with(design, &mut rng)?;
    let data = gen_dataset_with(&true_params, design.n, &mut rng)?;
    let mut order: Vec<usize> = (0..design.n).collect();
    order.shuffle(&mut rng);
    let n_test = design.test_size();
    let (test_idx, train_idx) = order.split_at(n_test);
    let train = data.subset(train_idx);
    let test = data.subset(test_idx);
    let test = test.with_observed(test.y_true().expect("simulated").to_vec())?;
    let em_seed = rng.random();
    Ok(SimInstance {
        true_params,
        train,
        test,
        em_seed,
    })
}

/// Scores of every method on one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub replication: usize,
    /// Naive Bayes on noisy labels; carries `delta_acc`.
    pub nb: MetricsReport,
    pub inb: MetricsReport,
    /// Prediction with the generating parameters.
    pub nbt: MetricsReport,
    /// Naive Bayes accuracy when trained on the true labels.
    pub nb_clean_acc: f64,
    pub inb_iterations: usize,
    pub inb_converged: bool,
    pub inb_identifiability_violation: bool,
}

/// Success or failure of one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub replication: usize,
    pub report: std::result::Result<ReplicationReport, String>,
}

fn score(name: &str, params: &ModelParams, test: &LabeledDataset) -> Result<MetricsReport> {
    let rows = predict_batch(params, test.x())?;
    let predicted: Vec<usize> = rows.iter().map(|r| r.predicted).collect();
    let mut scores = Array2::zeros((rows.len(), params.k()));
    for (i, row) in rows.iter().enumerate() {
        for (c, v) in row.log_probabilities.iter().enumerate() {
            scores[[i, c]] = *v;
        }
    }
    MetricsReport::evaluate(name, &predicted, &scores, test.y_true().unwrap_or(test.y_observed()))
}

/// Permutation matching estimated latent classes to true classes: entry `k` is
/// the estimated class most often assigned (by posterior arg-max on the
/// training set) to instances of true class `k`.
pub fn truth_alignment(estimated: &[usize], truth: &[usize], k: usize) -> Vec<usize> {
    let mut agreement = Array2::<f64>::zeros((k, k));
    for (&e, &t) in estimated.iter().zip(truth) {
        agreement[[e, t]] += 1.0;
    }
    max_weight_assignment(&agreement)
}

/// Fits NB, INB and scores NB-T on one generated replication.
pub fn run_replication(design: &SimDesign, replication: usize) -> Result<ReplicationReport> {
    let inst = generate_instance(design, replication)?;
    let truth = inst.train.y_true().expect("simulated").to_vec();
    let k = design.k;
    let identity: Vec<usize> = (0..k).collect();

    let nb_params = fit_nb(&inst.train, design.smoothing)?;
    let clean_params = fit_nb(&inst.train.with_observed(truth.clone())?, design.smoothing)?;
    let inb = fit_inb(&inst.train, &design.em_config(inst.em_seed))?;

    let clean_acc = score("nb-clean", &clean_params, &inst.test)?.acc;
    let mut nb = score("nb", &nb_params, &inst.test)?
        .with_mse(mse_params(nb_params.p(), inst.true_params.p(), &identity)?);
    nb.delta_acc = Some(crate::metrics::delta_acc(nb.acc, clean_acc));

    let assigned = e_step(&inb.params, &inst.train)?.argmax();
    let alignment = truth_alignment(&assigned, &truth, k);
    let inb_report = score("inb", &inb.params, &inst.test)?
        .with_mse(mse_params(inb.params.p(), inst.true_params.p(), &alignment)?);
    let nbt = score("nb-t", &inst.true_params, &inst.test)?.with_mse(0.0);

    Ok(ReplicationReport {
        replication,
        nb,
        inb: inb_report,
        nbt,
        nb_clean_acc: clean_acc,
        inb_iterations: inb.trace.iterations,
        inb_converged: inb.trace.converged,
        inb_identifiability_violation: inb.identifiability.violation(),
    })
}

/// Runs every replication of `design` in parallel. Failures are recorded and do
/// not stop the study.
pub fn run_replication_study(design: &SimDesign) -> Result<Vec<ReplicationOutcome>> {
    design.validate()?;
    Ok((0..design.replications)
        .into_par_iter()
        .map(|r| ReplicationOutcome {
            replication: r,
            report: run_replication(design, r).map_err(|e| e.to_string()),
        })
        .collect())
}

/// A simulation with `d2` Gaussian features added to the binary design.
///
/// Class means are drawn from `N(0, mean_spread²)` and standard deviations
/// from `U[0.5, 1.5)`, independently per feature and class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedDesign {
    pub base: SimDesign,
    pub d2: usize,
    pub mean_spread: f64,
}

impl Default for MixedDesign {
    fn default() -> Self {
        Self {
            base: SimDesign {
                d: 50,
                rho_interval: RhoInterval { lo: 0.6, hi: 0.7 },
                ..SimDesign::default()
            },
            d2: 5,
            mean_spread: 1.0,
        }
    }
}

/// One mixed replication; test labels are clean.
#[derive(Debug, Clone)]
pub struct MixedInstance {
    pub true_params: ModelParams,
    pub true_gaussian: GaussianParams,
    pub train: MixedDataset,
    pub test: MixedDataset,
    pub em_seed: u64,
}

pub fn generate_mixed_instance(design: &MixedDesign, replication: usize) -> Result<MixedInstance> {
    let base = &design.base;
    base.validate()?;
    if design.mean_spread.is_nan() || design.mean_spread <= 0.0 {
        return Err(Error::InvalidConfig("mean_spread must be positive".into()));
    }
    let mut rng = stream(base.seed, Purpose::Replication, replication as u64);
    let true_params = gen_true_params_with(base, &mut rng)?;
    let binary = gen_dataset_with(&true_params, base.n, &mut rng)?;
    let k = base.k;
    let spread = Normal::new(0.0, design.mean_spread).expect("valid normal");
    let mu = Array2::from_shape_simple_fn((design.d2, k), || spread.sample(&mut rng));
    let sigma = Array2::from_shape_simple_fn((design.d2, k), || rng.random_range(0.5..1.5));
    let truth = binary.y_true().expect("simulated").to_vec();
    let mut z = Array2::zeros((base.n, design.d2));
    for (i, &t) in truth.iter().enumerate() {
        for j in 0..design.d2 {
            let dist = Normal::new(mu[[j, t]], sigma[[j, t]]).expect("valid normal");
            z[[i, j]] = dist.sample(&mut rng);
        }
    }
    let true_gaussian = GaussianParams::new(mu, sigma)?;
    let data = MixedDataset::new(binary, z)?;
    let mut order: Vec<usize> = (0..base.n).collect();
    order.shuffle(&mut rng);
    let (test_idx, train_idx) = order.split_at(base.test_size());
    let train = data.subset(train_idx);
    let test = data.subset(test_idx);
    let clean = test.binary().y_true().expect("simulated").to_vec();
    let test = MixedDataset::new(test.binary().with_observed(clean)?, test.z().clone())?;
    Ok(MixedInstance {
        true_params,
        true_gaussian,
        train,
        test,
        em_seed: rng.random(),
    })
}

/// Test accuracies of the Gaussian Naive Bayes baseline and the mixed EM fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedReplicationReport {
    pub replication: usize,
    pub gnb_acc: f64,
    pub inb_acc: f64,
}

pub fn run_mixed_replication(design: &MixedDesign, replication: usize) -> Result<MixedReplicationReport> {
    let inst = generate_mixed_instance(design, replication)?;
    let gold = inst.test.binary().y_observed();
    let (nb_params, nb_gauss) = fit_nb_mixed(&inst.train, design.base.smoothing)?;
    let fit = fit_inb_mixed(&inst.train, &design.base.em_config(inst.em_seed))?;
    let acc = |p: &ModelParams, g: &GaussianParams| -> Result<f64> {
        let rows = predict_batch_mixed(p, g, &inst.test)?;
        let predicted: Vec<usize> = rows.iter().map(|r| r.predicted).collect();
        crate::metrics::accuracy(&predicted, gold)
    };
    Ok(MixedReplicationReport {
        replication,
        gnb_acc: acc(&nb_params, &nb_gauss)?,
        inb_acc: acc(&fit.params, &fit.gaussian)?,
    })
}

/// Means over the successful replications of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub rho_interval: RhoInterval,
    pub n: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub nb_mse: f64,
    pub inb_mse: f64,
    pub nb_acc: f64,
    pub inb_acc: f64,
    pub nbt_acc: f64,
    pub nb_auc: f64,
    pub inb_auc: f64,
    pub nbt_auc: f64,
    pub delta_acc: f64,
}

impl StudySummary {
    pub fn from_outcomes(design: &SimDesign, outcomes: &[ReplicationOutcome]) -> Result<Self> {
        let ok: Vec<&ReplicationReport> = outcomes.iter().filter_map(|o| o.report.as_ref().ok()).collect();
        if ok.is_empty() {
            return Err(Error::InvalidConfig("every replication failed".into()));
        }
        let mean = |f: &dyn Fn(&ReplicationReport) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64;
        Ok(Self {
            rho_interval: design.rho_interval,
            n: design.n,
            succeeded: ok.len(),
            failed: outcomes.len() - ok.len(),
            nb_mse: mean(&|r| r.nb.mse.unwrap_or(f64::NAN)),
            inb_mse: mean(&|r| r.inb.mse.unwrap_or(f64::NAN)),
            nb_acc: mean(&|r| r.nb.acc),
            inb_acc: mean(&|r| r.inb.acc),
            nbt_acc: mean(&|r| r.nbt.acc),
            nb_auc: mean(&|r| r.nb.macro_auc),
            inb_auc: mean(&|r| r.inb.macro_auc),
            nbt_auc: mean(&|r| r.nbt.macro_auc),
            delta_acc: mean(&|r| r.nb.delta_acc.unwrap_or(f64::NAN)),
        })
    }

    /// Column header of [`StudySummary::delimited_row`], in the published table's order.
    pub const DELIMITED_HEADER: &'static str = "rho_interval,n,nb_mse_e3,inb_mse_e3,nb_acc,inb_acc,nbt_acc,nb_auc,inb_auc,nbt_auc,delta_acc,replications_ok,replications_failed";

    pub fn delimited_row(&self) -> String {
        format!(
            "\"{}\",{},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{:.1},{},{}",
            self.rho_interval,
            self.n,
            self.nb_mse * 1e3,
            self.inb_mse * 1e3,
            self.nb_acc,
            self.inb_acc,
            self.nbt_acc,
            self.nb_auc,
            self.inb_auc,
            self.nbt_auc,
            self.delta_acc,
            self.succeeded,
            self.failed
        )
    }
}

/// Runs a study and summarizes it.
pub fn run_study(design: &SimDesign) -> Result<(Vec<ReplicationOutcome>, StudySummary)> {
    let outcomes = run_replication_study(design)?;
    let summary = StudySummary::from_outcomes(design, &outcomes)?;
    Ok((outcomes, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_design() -> SimDesign {
        SimDesign {
            n: 200,
            d: 20,
            k: 3,
            replications: 2,
            em_restarts: 2,
            ..SimDesign::default()
        }
    }

    #[test]
    fn interval_parsing() {
        let iv: RhoInterval = "0.55:0.65".parse().unwrap();
        assert_eq!(iv, RhoInterval { lo: 0.55, hi: 0.65 });
        assert_eq!(iv.to_string(), "[0.55,0.65)");
        assert_eq!("1:1".parse::<RhoInterval>().unwrap().to_string(), "[1.00,1.00]");
        assert!("0.4:0.6".parse::<RhoInterval>().is_err());
        assert!("0.6".parse::<RhoInterval>().is_err());
    }

    #[test]
    fn unbalanced_priors() {
        let pi = Priors::Unbalanced.vector(5);
        assert_abs_diff_eq!(pi[0], 0.428, epsilon = 1e-3);
        for c in 1..5 {
            assert_abs_diff_eq!(pi[c], 0.143, epsilon = 1e-3);
        }
        assert_abs_diff_eq!(pi.sum(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pi[0] / pi[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_interval_gives_identity() {
        let design = SimDesign {
            rho_interval: RhoInterval { lo: 1.0, hi: 1.0 },
            ..small_design()
        };
        let params = gen_true_params(&design, 1).unwrap();
        assert_eq!(params.rho(), &Array2::<f64>::eye(3));
        let data = gen_dataset(&params, 300, 4).unwrap();
        assert_eq!(data.y_observed(), data.y_true().unwrap());
    }

    #[test]
    fn generated_rho_is_dominant() {
        for iv in RhoInterval::standard_grid() {
            let design = SimDesign {
                rho_interval: iv,
                ..small_design()
            };
            for seed in 0..10 {
                let params = gen_true_params(&design, seed).unwrap();
                assert!(params.is_diagonally_dominant());
                for c in 0..3 {
                    let diag = params.rho()[[c, c]];
                    assert!(diag >= iv.lo && (diag < iv.hi || iv.lo == iv.hi));
                }
            }
        }
    }

    #[test]
    fn generated_p_mean() {
        // E[U[0,0.1)] + 0.65 = 0.70; clamping at 0.01/0.99 is ~5 sd away.
        let design = SimDesign {
            d: 20_000,
            k: 5,
            ..small_design()
        };
        let params = gen_true_params(&design, 3).unwrap();
        let mean = params.p().mean().unwrap();
        assert!((mean - 0.70).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn instance_is_deterministic_and_partitions() {
        let design = small_design();
        let a = generate_instance(&design, 1).unwrap();
        let b = generate_instance(&design, 1).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.test.n(), 40);
        assert_eq!(a.train.n(), 160);
        assert_eq!(a.test.y_observed(), a.test.y_true().unwrap());
        assert_ne!(a.train, generate_instance(&design, 0).unwrap().train);
    }

    #[test]
    fn study_is_deterministic() {
        let design = small_design();
        let a = run_study(&design).unwrap().1;
        let b = run_study(&design).unwrap().1;
        assert_eq!(a, b);
        assert_eq!(a.succeeded, 2);
    }

    #[test]
    fn truth_alignment_recovers_permutation() {
        let truth = [0, 1, 2, 0, 1, 2];
        let est = [2, 0, 1, 2, 0, 1];
        assert_eq!(truth_alignment(&est, &truth, 3), vec![2, 0, 1]);
    }
}
