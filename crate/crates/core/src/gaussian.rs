//! Mixed binary and continuous features: Gaussian class-conditional densities
//! for the continuous block, fit jointly with the noisy-label model.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{LabeledDataset, MixedDataset};
use crate::em::{
    best_of_restarts, enforce_identifiability, init_params, iterate, log_zeta, m_step_inner,
    normalize_rows, warm_start_params, EmConfig, EmModel, EmTrace, Identifiability,
    Responsibilities,
};
use crate::error::{Error, Result};
use crate::math::{argmax, log_normal_pdf, normalize_log_weights, NeumaierSum};
use crate::nb::{check_shapes, fit_nb};
use crate::params::{row_to_f64, LogTables, ModelParams, PosteriorRow};
use crate::rng::{stream, Purpose};

/// Relative size of the standard-deviation floor.
pub const SIGMA_FLOOR_SCALE: f64 = 1e-6;

/// Per-class normal densities: `mu[[j, k]]` and `sigma[[j, k]]` for continuous feature `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    mu: Array2<f64>,
    sigma: Array2<f64>,
}

impl GaussianParams {
    pub fn new(mu: Array2<f64>, sigma: Array2<f64>) -> Result<Self> {
        if mu.dim() != sigma.dim() {
            return Err(Error::ShapeMismatch {
                what: "gaussian parameter shape",
                expected: mu.len(),
                found: sigma.len(),
            });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite mean".into()));
        }
        if sigma.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParams(
                "standard deviations must be positive and finite".into(),
            ));
        }
        Ok(Self { mu, sigma })
    }

    /// No continuous features.
    pub fn empty(k: usize) -> Self {
        Self {
            mu: Array2::zeros((0, k)),
            sigma: Array2::zeros((0, k)),
        }
    }

    pub fn mu(&self) -> &Array2<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn d2(&self) -> usize {
        self.mu.nrows()
    }

    pub fn k(&self) -> usize {
        self.mu.ncols()
    }

    /// Moves latent class `c` to `perm[c]`.
    pub fn permute_latent(&self, perm: &[usize]) -> Self {
        let mut mu = Array2::zeros(self.mu.dim());
        let mut sigma = Array2::zeros(self.sigma.dim());
        for (old, &new) in perm.iter().enumerate() {
            mu.column_mut(new).assign(&self.mu.column(old));
            sigma.column_mut(new).assign(&self.sigma.column(old));
        }
        Self { mu, sigma }
    }

    /// `Σ_j ln φ_jk(z_j)` for every class.
    fn add_log_density(&self, z_row: &[f64], out: &mut [f64]) {
        if z_row.is_empty() {
            return;
        }
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &z) in z_row.iter().enumerate() {
                acc += log_normal_pdf(z, self.mu[[j, c]], self.sigma[[j, c]]);
            }
            *o += acc;
        }
    }
}

/// Population mean and standard deviation of every column of `z`.
fn column_moments(z: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = z.nrows().max(1) as f64;
    let mean = z.sum_axis(Axis(0)) / n;
    let sd = Array1::from_iter(z.columns().into_iter().zip(mean.iter()).map(|(col, &m)| {
        (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
    }));
    (mean, sd)
}

/// Lower bound for every `sigma_jk`: `1e-6` times the feature's overall
/// standard deviation, or `1e-6` for a constant feature.
pub fn sigma_floor(z: &Array2<f64>) -> Array1<f64> {
    let (_, sd) = column_moments(z);
    sd.mapv(|s| SIGMA_FLOOR_SCALE * if s > 0.0 { s } else { 1.0 })
}

fn check_gaussian(gparams: &GaussianParams, data: &MixedDataset) -> Result<()> {
    if gparams.d2() != data.d2() {
        return Err(Error::ShapeMismatch {
            what: "continuous features",
            expected: data.d2(),
            found: gparams.d2(),
        });
    }
    if gparams.k() != data.k() {
        return Err(Error::ShapeMismatch {
            what: "gaussian classes",
            expected: data.k(),
            found: gparams.k(),
        });
    }
    Ok(())
}

fn log_zeta_mixed(
    params: &ModelParams,
    gparams: &GaussianParams,
    data: &MixedDataset,
) -> Array2<f64> {
    let mut lz = log_zeta(params, data.binary());
    if data.d2() > 0 {
        let (z, k) = (data.z(), params.k());
        lz.as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(i, row)| {
                let z_row = z.row(i).to_vec();
                gparams.add_log_density(&z_row, row);
            });
    }
    lz
}

fn e_step_mixed_with_loglik(
    params: &ModelParams,
    gparams: &GaussianParams,
    data: &MixedDataset,
) -> Result<(Responsibilities, f64)> {
    check_shapes(params, data.binary())?;
    check_gaussian(gparams, data)?;
    normalize_rows(&log_zeta_mixed(params, gparams, data))
}

/// E-step with the density terms `Σ_j ln φ_jk(z_ij)` added to the binary ones.
pub fn e_step_mixed(
    params: &ModelParams,
    gparams: &GaussianParams,
    data: &MixedDataset,
) -> Result<Responsibilities> {
    e_step_mixed_with_loglik(params, gparams, data).map(|(g, _)| g)
}

/// Observed-data log-likelihood `ln p(X, Z, Y | θ)`; a density, so it can be positive.
pub fn observed_loglik_mixed(
    params: &ModelParams,
    gparams: &GaussianParams,
    data: &MixedDataset,
) -> Result<f64> {
    e_step_mixed_with_loglik(params, gparams, data).map(|(_, ll)| ll)
}

/// M-step: the binary updates of [`crate::m_step`] plus weighted means and
/// weighted (1/Σγ) standard deviations, floored by [`sigma_floor`].
///
/// A class with no responsibility gets the overall mean and standard deviation.
pub fn m_step_mixed(
    gamma: &Responsibilities,
    data: &MixedDataset,
) -> Result<(ModelParams, GaussianParams)> {
    m_step_mixed_inner(gamma, data, false)
}

fn m_step_mixed_inner(
    gamma: &Responsibilities,
    data: &MixedDataset,
    fix_rho_identity: bool,
) -> Result<(ModelParams, GaussianParams)> {
    let (params, _) = m_step_inner(gamma, data.binary(), fix_rho_identity)?;
    Ok((params, gaussian_update(gamma, data)))
}

fn gaussian_update(gamma: &Responsibilities, data: &MixedDataset) -> GaussianParams {
    let (d2, k) = (data.d2(), data.k());
    if d2 == 0 {
        return GaussianParams::empty(k);
    }
    let z = data.z();
    let g = gamma.gamma();
    let (global_mean, global_sd) = column_moments(z);
    let floor = sigma_floor(z);
    let mut mu = Array2::zeros((d2, k));
    let mut sigma = Array2::zeros((d2, k));
    for c in 0..k {
        let gc = g.column(c);
        let weight: f64 = gc.sum();
        for j in 0..d2 {
            let zj = z.column(j);
            let (m, s) = if weight > 0.0 {
                let m = gc.iter().zip(zj.iter()).map(|(w, v)| w * v).sum::<f64>() / weight;
                let var = gc
                    .iter()
                    .zip(zj.iter())
                    .map(|(w, v)| w * (v - m) * (v - m))
                    .sum::<f64>()
                    / weight;
                (m, var.sqrt())
            } else {
                (global_mean[j], global_sd[j])
            };
            mu[[j, c]] = m;
            sigma[[j, c]] = s.max(floor[j]);
        }
    }
    GaussianParams { mu, sigma }
}

/// `Q(θ, θ̂) = Σ_i Σ_k γ_ik [ln pi_k + ln rho_{y_i k} + binary terms + Σ_j ln φ_jk(z_ij)]`.
pub fn expected_complete_loglik(
    params: &ModelParams,
    gparams: &GaussianParams,
    gamma: &Responsibilities,
    data: &MixedDataset,
) -> Result<f64> {
    check_shapes(params, data.binary())?;
    check_gaussian(gparams, data)?;
    if gamma.n() != data.n() || gamma.k() != data.k() {
        return Err(Error::ShapeMismatch {
            what: "responsibilities",
            expected: data.n(),
            found: gamma.n(),
        });
    }
    let lz = log_zeta_mixed(params, gparams, data);
    let total: NeumaierSum = lz
        .iter()
        .zip(gamma.gamma().iter())
        .filter(|(_, g)| **g > 0.0)
        .map(|(l, g)| g * l)
        .collect();
    Ok(total.value())
}

/// Random Gaussian start: each class mean is a randomly chosen instance, each
/// standard deviation the feature's overall one.
pub fn init_gaussian(data: &MixedDataset, config: &EmConfig, restart: usize) -> GaussianParams {
    let (d2, k, n) = (data.d2(), data.k(), data.n());
    if d2 == 0 {
        return GaussianParams::empty(k);
    }
    let mut rng = stream(config.seed, Purpose::GaussianInit, restart as u64);
    let z = data.z();
    let (_, sd) = column_moments(z);
    let floor = sigma_floor(z);
    let mut mu = Array2::zeros((d2, k));
    let mut sigma = Array2::zeros((d2, k));
    for c in 0..k {
        let i = rng.random_range(0..n);
        for j in 0..d2 {
            mu[[j, c]] = z[[i, j]];
            sigma[[j, c]] = sd[j].max(floor[j]);
        }
    }
    GaussianParams { mu, sigma }
}

/// Warm start: per-class moments under the observed labels.
fn warm_start_gaussian(data: &MixedDataset) -> GaussianParams {
    let one_hot = Responsibilities::one_hot(data.binary().y_observed(), data.k());
    gaussian_update(&one_hot, data)
}

#[derive(Debug, Clone)]
struct MixedModel {
    params: ModelParams,
    gaussian: GaussianParams,
}

impl EmModel for MixedModel {
    type Data = MixedDataset;

    fn expectation(&self, data: &MixedDataset) -> Result<(Responsibilities, f64)> {
        e_step_mixed_with_loglik(&self.params, &self.gaussian, data)
    }

    fn maximization(gamma: &Responsibilities, data: &MixedDataset, config: &EmConfig) -> Result<Self> {
        let (params, gaussian) = m_step_mixed_inner(gamma, data, config.fix_rho_identity)?;
        Ok(Self { params, gaussian })
    }
}

/// Result of [`fit_inb_mixed`].
#[derive(Debug, Clone)]
pub struct MixedFit {
    pub params: ModelParams,
    pub gaussian: GaussianParams,
    pub trace: EmTrace,
    pub identifiability: Identifiability,
}

/// EM for the mixed model with the same restarts, stopping rule and
/// relabeling as [`crate::fit_inb`]. With no continuous features the result
/// equals `fit_inb` on the binary block bit for bit.
pub fn fit_inb_mixed(data: &MixedDataset, config: &EmConfig) -> Result<MixedFit> {
    config.validate()?;
    let binary: &LabeledDataset = data.binary();
    let (n, d, k) = (binary.n(), binary.d(), binary.k());
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if n < k {
        return Err(Error::InvalidConfig(format!(
            "need at least as many instances ({n}) as classes ({k})"
        )));
    }
    let (model, trace) = best_of_restarts(config, |restart| {
        let init = if config.is_warm_start(restart) {
            MixedModel {
                params: warm_start_params(binary, config)?,
                gaussian: warm_start_gaussian(data),
            }
        } else {
            MixedModel {
                params: init_params(k, d, config, restart)?,
                gaussian: init_gaussian(data, config, restart),
            }
        };
        iterate(data, init, config)
    })?;
    let (params, identifiability) = enforce_identifiability(&model.params);
    let gaussian = model.gaussian.permute_latent(&identifiability.permutation);
    if identifiability.violation() {
        log::warn!(
            "mislabeling matrix is not diagonal-dominant in columns {:?}",
            identifiability.violating_columns
        );
    }
    Ok(MixedFit {
        params,
        gaussian,
        trace,
        identifiability,
    })
}

/// Gaussian Naive Bayes baseline on the observed labels: [`crate::fit_nb`] for
/// the binary block and per-class moments of the continuous block.
pub fn fit_nb_mixed(data: &MixedDataset, smoothing: f64) -> Result<(ModelParams, GaussianParams)> {
    let params = fit_nb(data.binary(), smoothing)?;
    Ok((params, warm_start_gaussian(data)))
}

/// Posterior over the true class from both feature blocks; `rho` plays no part.
pub fn posterior_mixed(
    params: &ModelParams,
    gparams: &GaussianParams,
    x_row: &[u8],
    z_row: &[f64],
) -> Result<PosteriorRow> {
    if x_row.len() != params.d() || z_row.len() != gparams.d2() {
        return Err(Error::ShapeMismatch {
            what: "feature row",
            expected: params.d() + gparams.d2(),
            found: x_row.len() + z_row.len(),
        });
    }
    Ok(posterior_with_tables(params, &params.log_tables(), gparams, x_row, z_row))
}

fn posterior_with_tables(
    params: &ModelParams,
    tables: &LogTables,
    gparams: &GaussianParams,
    x_row: &[u8],
    z_row: &[f64],
) -> PosteriorRow {
    let k = params.k();
    let mut xf = Vec::with_capacity(x_row.len());
    row_to_f64(x_row, &mut xf);
    let mut log_w = vec![0.0; k];
    tables.feature_loglik(&xf, &mut log_w);
    for (lw, pi) in log_w.iter_mut().zip(params.pi()) {
        *lw += pi.ln();
    }
    gparams.add_log_density(z_row, &mut log_w);
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

/// [`posterior_mixed`] for every instance of `data`, in parallel.
pub fn predict_batch_mixed(
    params: &ModelParams,
    gparams: &GaussianParams,
    data: &MixedDataset,
) -> Result<Vec<PosteriorRow>> {
    check_shapes(params, data.binary())?;
    check_gaussian(gparams, data)?;
    let tables = params.log_tables();
    let z = data.z();
    Ok((0..data.n())
        .into_par_iter()
        .map(|i| {
            let z_row = z.row(i).to_vec();
            posterior_with_tables(params, &tables, gparams, data.binary().row_slice(i), &z_row)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn four_points() -> MixedDataset {
        let binary = LabeledDataset::new(
            array![[1], [0], [1], [0]],
            vec![0, 0, 1, 1],
            None,
            2,
        )
        .unwrap();
        MixedDataset::new(binary, array![[1.0], [3.0], [-2.0], [4.0]]).unwrap()
    }

    #[test]
    fn one_hot_moments() {
        let data = four_points();
        let gamma = Responsibilities::one_hot(&[0, 0, 1, 1], 2);
        let (_, g) = m_step_mixed(&gamma, &data).unwrap();
        // class 0: {1, 3} -> mean 2, sd 1; class 1: {-2, 4} -> mean 1, sd 3
        assert_abs_diff_eq!(g.mu()[[0, 0]], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.sigma()[[0, 0]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.mu()[[0, 1]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.sigma()[[0, 1]], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_feature_hits_floor() {
        let binary = LabeledDataset::new(array![[1], [0], [1]], vec![0, 1, 0], None, 2).unwrap();
        let data = MixedDataset::new(binary, array![[2.5], [2.5], [2.5]]).unwrap();
        let gamma = Responsibilities::one_hot(&[0, 1, 0], 2);
        let (_, g) = m_step_mixed(&gamma, &data).unwrap();
        assert_eq!(g.mu()[[0, 0]], 2.5);
        assert_eq!(g.sigma()[[0, 0]], SIGMA_FLOOR_SCALE);
        assert_eq!(g.sigma()[[0, 1]], SIGMA_FLOOR_SCALE);
    }

    #[test]
    fn identical_components_cancel() {
        let data = four_points();
        let params = ModelParams::new(
            array![0.4, 0.6],
            array![[0.3, 0.8]],
            array![[0.7, 0.2], [0.3, 0.8]],
        )
        .unwrap();
        let gparams = GaussianParams::new(array![[0.5, 0.5]], array![[2.0, 2.0]]).unwrap();
        let mixed = e_step_mixed(&params, &gparams, &data).unwrap();
        let binary = crate::e_step(&params, data.binary()).unwrap();
        for (a, b) in mixed.gamma().iter().zip(binary.gamma().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_class_falls_back_to_global_moments() {
        let data = four_points();
        let gamma = Responsibilities::one_hot(&[0, 0, 0, 0], 2);
        let (_, g) = m_step_mixed(&gamma, &data).unwrap();
        assert_abs_diff_eq!(g.mu()[[0, 1]], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.sigma()[[0, 1]], g.sigma()[[0, 0]], epsilon = 1e-15);
    }
}
