//! EM estimation of Naive Bayes with latent true labels.
//!
//! The observed label `y_i` is a noisy copy of the latent true class `y*_i`
//! drawn from column `y*_i` of the mislabeling matrix `rho`. The E-step computes
//! `gamma_ik = P(y*_i = k | x_i, y_i, θ)`; the M-step re-estimates `pi`, `p` and
//! `rho` in closed form from those responsibilities.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use crate::assignment::max_weight_assignment;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::math::{normalize_log_weights, order_free_sum, NeumaierSum};
use crate::nb::{check_shapes, fit_nb, DEFAULT_SMOOTHING};
use crate::params::{dominance_violations, row_to_f64, ModelParams};
use crate::rng::{stream, Purpose};

/// Lower clamp applied to every estimated probability in the M-step.
pub const PARAM_EPS: f64 = 1e-10;

/// Tolerance for responsibility rows summing to one.
const ROW_TOL: f64 = 1e-10;

/// Convergence and restart controls.
#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop once the relative improvement of the observed-data log-likelihood falls below this.
    pub tol: f64,
    pub seed: u64,
    pub restarts: usize,
    /// Lower end of the initial diagonal of `rho`; must exceed 0.5.
    pub rho_diag_floor: f64,
    /// Debug mode: hold `rho` at the identity, which reduces EM to plain Naive Bayes.
    pub fix_rho_identity: bool,
    /// Adds one extra start from the Naive Bayes fit to the observed labels.
    pub warm_start: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            seed: 0,
            restarts: 5,
            rho_diag_floor: 0.55,
            fix_rho_identity: false,
            warm_start: true,
        }
    }
}

impl EmConfig {
    /// Random restarts plus the optional warm start, which always comes last.
    pub fn candidates(&self) -> usize {
        self.restarts + usize::from(self.warm_start)
    }

    /// Whether candidate `index` is the warm start.
    pub fn is_warm_start(&self, index: usize) -> bool {
        self.warm_start && index == self.restarts
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be positive".into()));
        }
        if !(self.rho_diag_floor > 0.5 && self.rho_diag_floor < 0.99) {
            return Err(Error::InvalidConfig(
                "rho_diag_floor must lie in (0.5, 0.99)".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior membership of every instance in every latent class.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    gamma: Array2<f64>,
}

impl Responsibilities {
    /// Checks that rows are non-negative and sum to one.
    pub fn new(gamma: Array2<f64>) -> Result<Self> {
        for (i, row) in gamma.rows().into_iter().enumerate() {
            if row.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err(Error::InvalidParams(format!(
                    "responsibility row {i} has a negative or NaN entry"
                )));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidParams(format!(
                    "responsibility row {i} sums to {s}"
                )));
            }
        }
        Ok(Self { gamma })
    }

    /// Indicator rows for the given labels.
    pub fn one_hot(labels: &[usize], k: usize) -> Self {
        let mut gamma = Array2::zeros((labels.len(), k));
        for (i, &y) in labels.iter().enumerate() {
            gamma[[i, y]] = 1.0;
        }
        Self { gamma }
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Self {
            gamma: Array2::from_elem((n, k), 1.0 / k as f64),
        }
    }

    pub fn gamma(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn k(&self) -> usize {
        self.gamma.ncols()
    }

    /// Most probable latent class per row, ties to the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        self.gamma
            .rows()
            .into_iter()
            .map(|r| crate::math::argmax(r.as_slice().unwrap_or(&r.to_vec())))
            .collect()
    }
}

/// Per-run record of the EM iterations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrace {
    /// Observed-data log-likelihood of the initial parameters and after every M-step.
    pub loglik_history: Vec<f64>,
    /// Number of M-steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Start whose run attained the highest final log-likelihood; index
    /// `restarts` is the warm start when enabled.
    pub restart_index: usize,
    /// Final log-likelihood of every start, in start order.
    pub restart_logliks: Vec<f64>,
}

impl EmTrace {
    pub fn final_loglik(&self) -> f64 {
        self.loglik_history.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// True when no step decreased the log-likelihood by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.loglik_history.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

/// Random starting point for one restart.
///
/// Priors are uniform; `p` is uniform on `[0.05, 0.95)`; each column of `rho`
/// gets a diagonal uniform on `[rho_diag_floor, 0.99)` and spreads the rest of
/// its mass over the other rows by normalized uniform draws.
pub fn init_params(k: usize, d: usize, config: &EmConfig, restart: usize) -> Result<ModelParams> {
    if k < 2 {
        return Err(Error::InvalidConfig("EM needs at least two classes".into()));
    }
    if d == 0 {
        return Err(Error::InvalidConfig("EM needs at least one feature".into()));
    }
    config.validate()?;
    let mut rng = stream(config.seed, Purpose::EmInit, restart as u64);
    let pi = Array1::from_elem(k, 1.0 / k as f64);
    let mut p = Array2::zeros((d, k));
    for v in p.iter_mut() {
        *v = rng.random_range(0.05..0.95);
    }
    let rho = if config.fix_rho_identity {
        Array2::eye(k)
    } else {
        random_dominant_columns(&mut rng, k, config.rho_diag_floor..0.99)
    };
    Ok(ModelParams::from_parts_unchecked(pi, p, rho))
}

/// Column-stochastic matrix whose diagonal is drawn from `diag_range` and whose
/// off-diagonal mass `1 - diag` is split by normalized uniform draws.
pub(crate) fn random_dominant_columns<R: Rng>(
    rng: &mut R,
    k: usize,
    diag_range: std::ops::Range<f64>,
) -> Array2<f64> {
    let mut rho = Array2::zeros((k, k));
    for c in 0..k {
        let diag = if diag_range.start >= diag_range.end {
            diag_range.start
        } else {
            rng.random_range(diag_range.clone())
        };
        let mut draws: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>()).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            draws.iter_mut().for_each(|v| *v /= total);
        } else {
            draws.iter_mut().for_each(|v| *v = 1.0 / (k - 1) as f64);
        }
        let mut off = draws.into_iter();
        for r in 0..k {
            rho[[r, c]] = if r == c {
                diag
            } else {
                off.next().unwrap() * (1.0 - diag)
            };
        }
    }
    rho
}

/// `ln ζ_ik = ln pi_k + ln rho_{y_i k} + Σ_j [x_ij ln p_jk + (1 - x_ij) ln(1 - p_jk)]`.
pub(crate) fn log_zeta(params: &ModelParams, data: &LabeledDataset) -> Array2<f64> {
    let (n, k) = (data.n(), params.k());
    let tables = params.log_tables();
    let ln_pi: Vec<f64> = params.pi().iter().map(|v| v.ln()).collect();
    let ln_rho = params.rho().mapv(f64::ln);
    let mut out = vec![0.0; n * k];
    out.par_chunks_mut(k).enumerate().for_each_init(Vec::new, |buf, (i, row)| {
        row_to_f64(data.row_slice(i), buf);
        tables.feature_loglik(buf, row);
        let y = data.y_observed()[i];
        for c in 0..k {
            row[c] += ln_pi[c] + ln_rho[[y, c]];
        }
    });
    Array2::from_shape_vec((n, k), out).expect("shape matches")
}

/// Normalizes `ln ζ` rows into responsibilities and returns them with
/// `Σ_i ln Σ_k ζ_ik`.
pub(crate) fn normalize_rows(log_zeta: &Array2<f64>) -> Result<(Responsibilities, f64)> {
    let (n, k) = log_zeta.dim();
    let mut gamma = vec![0.0; n * k];
    let mut row_lse = vec![0.0; n];
    gamma
        .par_chunks_mut(k)
        .zip(row_lse.par_iter_mut())
        .enumerate()
        .for_each(|(i, (g, lse))| {
            let row = log_zeta.row(i);
            let owned;
            let slice = match row.as_slice() {
                Some(s) => s,
                None => {
                    owned = row.to_vec();
                    &owned
                }
            };
            *lse = normalize_log_weights(slice, g);
        });
    if let Some(row) = row_lse.iter().position(|v| *v == f64::NEG_INFINITY || v.is_nan()) {
        return Err(Error::DegenerateRow { row });
    }
    let total: NeumaierSum = row_lse.iter().copied().collect();
    let gamma = Array2::from_shape_vec((n, k), gamma).expect("shape matches");
    Ok((Responsibilities { gamma }, total.value()))
}

/// E-step: `gamma_ik = ζ_ik / Σ_k ζ_ik`, evaluated in log space.
pub fn e_step(params: &ModelParams, data: &LabeledDataset) -> Result<Responsibilities> {
    e_step_with_loglik(params, data).map(|(g, _)| g)
}

pub(crate) fn e_step_with_loglik(
    params: &ModelParams,
    data: &LabeledDataset,
) -> Result<(Responsibilities, f64)> {
    check_shapes(params, data)?;
    normalize_rows(&log_zeta(params, data))
}

/// Observed-data log-likelihood `ln P(X, Y | θ) = Σ_i ln Σ_k ζ_ik`.
pub fn observed_loglik(params: &ModelParams, data: &LabeledDataset) -> Result<f64> {
    e_step_with_loglik(params, data).map(|(_, ll)| ll)
}

/// Diagnostics from one M-step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MStepReport {
    /// Classes with zero total responsibility; their `p` and `rho` columns fell back to uniform.
    pub empty_classes: Vec<usize>,
    /// Whether any estimate was clamped to `[PARAM_EPS, 1 - PARAM_EPS]`.
    pub clamped: bool,
}

/// M-step: the closed-form maximizers of the expected complete log-likelihood.
///
/// `pi_k = Σ_i γ_ik / N`, `p_jk = Σ_i x_ij γ_ik / Σ_i γ_ik` and
/// `rho_ab = Σ_i 1(y_i = a) γ_ib / Σ_i γ_ib`.
pub fn m_step(gamma: &Responsibilities, data: &LabeledDataset) -> Result<(ModelParams, MStepReport)> {
    m_step_inner(gamma, data, false)
}

pub(crate) fn m_step_inner(
    gamma: &Responsibilities,
    data: &LabeledDataset,
    fix_rho_identity: bool,
) -> Result<(ModelParams, MStepReport)> {
    let (n, d, k) = (data.n(), data.d(), data.k());
    if gamma.n() != n {
        return Err(Error::ShapeMismatch {
            what: "responsibility rows",
            expected: n,
            found: gamma.n(),
        });
    }
    if gamma.k() != k {
        return Err(Error::ShapeMismatch {
            what: "responsibility columns",
            expected: k,
            found: gamma.k(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let g = gamma.gamma();
    let mut weight = vec![0.0; k];
    let g = g.as_standard_layout();
    let g = g.as_slice().expect("standard layout");
    // class-major: on[c * d + j] = Σ_i x_ij γ_ic
    let mut on = vec![0.0; d * k];
    let mut confusion = Array2::<f64>::zeros((k, k));
    let mut xf = Vec::with_capacity(d);
    for i in 0..n {
        let gi = &g[i * k..(i + 1) * k];
        for (w, v) in weight.iter_mut().zip(gi) {
            *w += v;
        }
        row_to_f64(data.row_slice(i), &mut xf);
        for (c, &gc) in gi.iter().enumerate() {
            for (acc, x) in on[c * d..(c + 1) * d].iter_mut().zip(&xf) {
                *acc += gc * x;
            }
        }
        let y = data.y_observed()[i];
        for (acc, v) in confusion.row_mut(y).iter_mut().zip(gi) {
            *acc += v;
        }
    }

    let mut report = MStepReport::default();
    let mut pi = Array1::from_iter(weight.iter().map(|w| w / n as f64));
    let mut p = Array2::zeros((d, k));
    let mut rho = Array2::zeros((k, k));
    for c in 0..k {
        if weight[c] > 0.0 {
            for j in 0..d {
                p[[j, c]] = on[c * d + j] / weight[c];
            }
            for a in 0..k {
                rho[[a, c]] = confusion[[a, c]] / weight[c];
            }
        } else {
            report.empty_classes.push(c);
            p.column_mut(c).fill(0.5);
            rho.column_mut(c).fill(1.0 / k as f64);
        }
    }
    if fix_rho_identity {
        rho = Array2::eye(k);
    }

    for v in p.iter_mut() {
        if *v < PARAM_EPS {
            *v = PARAM_EPS;
            report.clamped = true;
        } else if *v > 1.0 - PARAM_EPS {
            *v = 1.0 - PARAM_EPS;
            report.clamped = true;
        }
    }
    report.clamped |= clamp_and_renormalize(pi.as_slice_mut().expect("contiguous"));
    if !fix_rho_identity {
        for c in 0..k {
            let mut col: Vec<f64> = rho.column(c).to_vec();
            if clamp_and_renormalize(&mut col) {
                report.clamped = true;
                rho.column_mut(c).assign(&Array1::from(col));
            }
        }
    }
    Ok((ModelParams::from_parts_unchecked(pi, p, rho), report))
}

/// Raises entries below `PARAM_EPS` to it and rescales to unit sum. Returns
/// whether anything was clamped; untouched vectors keep their exact bits.
fn clamp_and_renormalize(values: &mut [f64]) -> bool {
    if values.len() < 2 || values.iter().all(|v| *v >= PARAM_EPS) {
        return false;
    }
    for v in values.iter_mut() {
        if *v < PARAM_EPS {
            *v = PARAM_EPS;
        }
    }
    let total = order_free_sum(values);
    values.iter_mut().for_each(|v| *v /= total);
    true
}

/// Outcome of relabeling latent classes so the diagonal of `rho` dominates.
#[derive(Debug, Clone, PartialEq)]
pub struct Identifiability {
    /// Latent class `c` of the input became class `permutation[c]`.
    pub permutation: Vec<usize>,
    /// Columns still not strictly diagonal-dominant after relabeling.
    pub violating_columns: Vec<usize>,
}

impl Identifiability {
    pub fn violation(&self) -> bool {
        !self.violating_columns.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Relabels latent classes by the permutation maximizing the trace of `rho`.
///
/// The likelihood is invariant to relabeling, so this only picks the labeling
/// in which each latent class matches the observed label it is most often
/// reported as. Residual violations are reported, never corrected.
pub fn enforce_identifiability(params: &ModelParams) -> (ModelParams, Identifiability) {
    let permutation = max_weight_assignment(params.rho());
    let relabeled = params.permute_latent(&permutation);
    let violating_columns = dominance_violations(relabeled.rho());
    (
        relabeled,
        Identifiability {
            permutation,
            violating_columns,
        },
    )
}

/// A model that can be fit by alternating E- and M-steps.
pub(crate) trait EmModel: Sized + Send {
    type Data: Sync;

    /// Responsibilities and the observed-data log-likelihood at `self`.
    fn expectation(&self, data: &Self::Data) -> Result<(Responsibilities, f64)>;

    fn maximization(gamma: &Responsibilities, data: &Self::Data, config: &EmConfig) -> Result<Self>;
}

impl EmModel for ModelParams {
    type Data = LabeledDataset;

    fn expectation(&self, data: &LabeledDataset) -> Result<(Responsibilities, f64)> {
        e_step_with_loglik(self, data)
    }

    fn maximization(gamma: &Responsibilities, data: &LabeledDataset, config: &EmConfig) -> Result<Self> {
        m_step_inner(gamma, data, config.fix_rho_identity).map(|(p, _)| p)
    }
}

/// Iterates from `init` until the relative log-likelihood gain drops below
/// `config.tol` or `config.max_iter` M-steps have run. The returned model is
/// the one whose log-likelihood is the last entry of the history.
pub(crate) fn iterate<M: EmModel>(data: &M::Data, init: M, config: &EmConfig) -> Result<(M, EmTrace)> {
    let mut model = init;
    let mut trace = EmTrace::default();
    loop {
        let (gamma, ll) = model.expectation(data)?;
        if !ll.is_finite() {
            return Err(Error::InvalidParams(format!(
                "observed log-likelihood became {ll} at iteration {}",
                trace.iterations
            )));
        }
        if let Some(&prev) = trace.loglik_history.last() {
            trace.loglik_history.push(ll);
            let rel = (ll - prev) / prev.abs().max(f64::MIN_POSITIVE);
            if rel < config.tol {
                trace.converged = true;
                break;
            }
        } else {
            trace.loglik_history.push(ll);
        }
        if trace.iterations >= config.max_iter {
            break;
        }
        model = M::maximization(&gamma, data, config)?;
        trace.iterations += 1;
    }
    trace.restart_logliks = vec![trace.final_loglik()];
    Ok((model, trace))
}

/// Runs every restart (in parallel) and keeps the one with the highest final
/// log-likelihood; ties go to the lowest restart index.
pub(crate) fn best_of_restarts<M, F>(config: &EmConfig, run: F) -> Result<(M, EmTrace)>
where
    M: Send,
    F: Fn(usize) -> Result<(M, EmTrace)> + Sync,
{
    config.validate()?;
    let runs: Vec<Result<(M, EmTrace)>> =
        (0..config.candidates()).into_par_iter().map(&run).collect();
    let mut best: Option<(M, EmTrace)> = None;
    let mut finals = Vec::with_capacity(runs.len());
    let mut first_error = None;
    for (restart, outcome) in runs.into_iter().enumerate() {
        match outcome {
            Ok((model, mut trace)) => {
                let ll = trace.final_loglik();
                finals.push(ll);
                trace.restart_index = restart;
                let better = best.as_ref().is_none_or(|(_, b)| ll > b.final_loglik());
                if better {
                    best = Some((model, trace));
                }
            }
            Err(e) => {
                finals.push(f64::NAN);
                log::warn!("EM restart {restart} failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match best {
        Some((model, mut trace)) => {
            trace.restart_logliks = finals;
            Ok((model, trace))
        }
        None => Err(first_error.expect("at least one restart ran")),
    }
}

/// EM from a caller-supplied starting point, without identifiability enforcement.
pub fn run_em(data: &LabeledDataset, init: ModelParams, config: &EmConfig) -> Result<(ModelParams, EmTrace)> {
    config.validate()?;
    check_shapes(&init, data)?;
    iterate(data, init, config)
}

/// Starting point taken from Naive Bayes on the observed labels: its priors and
/// feature probabilities, with every `rho` column set to a diagonal halfway
/// between `rho_diag_floor` and 0.99 and the rest spread evenly.
pub fn warm_start_params(data: &LabeledDataset, config: &EmConfig) -> Result<ModelParams> {
    let k = data.k();
    if k < 2 {
        return Err(Error::InvalidConfig("EM needs at least two classes".into()));
    }
    let nb = fit_nb(data, DEFAULT_SMOOTHING)?;
    let (pi, p, _) = nb.into_parts();
    let rho = if config.fix_rho_identity {
        Array2::eye(k)
    } else {
        let diag = 0.5 * (config.rho_diag_floor + 0.99);
        let off = (1.0 - diag) / (k - 1) as f64;
        Array2::from_shape_fn((k, k), |(r, c)| if r == c { diag } else { off })
    };
    ModelParams::new(pi, p, rho)
}

/// Result of [`fit_inb`].
#[derive(Debug, Clone)]
pub struct InbFit {
    pub params: ModelParams,
    pub trace: EmTrace,
    pub identifiability: Identifiability,
}

/// Fits the noisy-label Naive Bayes model by EM with random restarts, then
/// relabels the winning solution so `rho` is diagonal-dominant where possible.
pub fn fit_inb(data: &LabeledDataset, config: &EmConfig) -> Result<InbFit> {
    config.validate()?;
    let (n, d, k) = (data.n(), data.d(), data.k());
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if n < k {
        return Err(Error::InvalidConfig(format!(
            "need at least as many instances ({n}) as classes ({k})"
        )));
    }
    let (params, trace) = best_of_restarts(config, |restart| {
        let init = if config.is_warm_start(restart) {
            warm_start_params(data, config)?
        } else {
            init_params(k, d, config, restart)?
        };
        iterate(data, init, config)
    })?;
    let (params, identifiability) = enforce_identifiability(&params);
    if identifiability.violation() {
        log::warn!(
            "mislabeling matrix is not diagonal-dominant in columns {:?}",
            identifiability.violating_columns
        );
    }
    Ok(InbFit {
        params,
        trace,
        identifiability,
    })
}
