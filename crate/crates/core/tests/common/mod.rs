//! Independent reference computations shared by the integration tests.
//!
//! The oracles work in plain linear-space arithmetic by enumeration, so they
//! share no code path with the library's log-space routines.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use noisynb::{LabeledDataset, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A probability vector with every entry at least `floor`.
pub fn simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|v| floor + (1.0 - k as f64 * floor) * v / total)
        .collect()
}

/// Interior parameters with a random column-stochastic `rho`.
pub fn random_params(rng: &mut ChaCha8Rng, k: usize, d: usize) -> ModelParams {
    let pi = Array1::from(simplex(rng, k, 0.05));
    let p = Array2::from_shape_simple_fn((d, k), || rng.random_range(0.05..0.95));
    let mut rho = Array2::zeros((k, k));
    for c in 0..k {
        for (r, v) in simplex(rng, k, 0.02).into_iter().enumerate() {
            rho[[r, c]] = v;
        }
    }
    ModelParams::new(pi, p, rho).unwrap()
}

pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize, with_true: bool) -> LabeledDataset {
    let x = Array2::from_shape_simple_fn((n, d), || rng.random_range(0..2u8));
    let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let t = with_true.then(|| (0..n).map(|_| rng.random_range(0..k)).collect());
    LabeledDataset::new(x, y, t, k).unwrap()
}

/// `P(X_i, Y_i, Y*_i = t)` in linear space.
pub fn joint_row(params: &ModelParams, data: &LabeledDataset, i: usize, t: usize) -> f64 {
    let mut v = params.pi()[t] * params.rho()[[data.y_observed()[i], t]];
    for (j, &x) in data.row(i).iter().enumerate() {
        let p = params.p()[[j, t]];
        v *= if x == 1 { p } else { 1.0 - p };
    }
    v
}

/// Visits every assignment of latent labels to all `n` instances.
fn for_each_assignment(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut a = vec![0usize; n];
    loop {
        f(&a);
        let mut pos = 0;
        loop {
            if pos == n {
                return;
            }
            a[pos] += 1;
            if a[pos] < k {
                break;
            }
            a[pos] = 0;
            pos += 1;
        }
    }
}

/// Posterior marginals of every latent label, from the full joint over all
/// `K^n` latent assignments.
pub fn exhaustive_posteriors(params: &ModelParams, data: &LabeledDataset) -> Array2<f64> {
    let (n, k) = (data.n(), params.k());
    let mut mass = Array2::<f64>::zeros((n, k));
    let mut total = 0.0;
    for_each_assignment(n, k, |a| {
        let w: f64 = a.iter().enumerate().map(|(i, &t)| joint_row(params, data, i, t)).product();
        total += w;
        for (i, &t) in a.iter().enumerate() {
            mass[[i, t]] += w;
        }
    });
    mass / total
}

/// `ln Σ_{assignments} Π_i P(X_i, Y_i, Y*_i)`.
pub fn exhaustive_loglik(params: &ModelParams, data: &LabeledDataset) -> f64 {
    let mut total = 0.0;
    for_each_assignment(data.n(), params.k(), |a| {
        total += a
            .iter()
            .enumerate()
            .map(|(i, &t)| joint_row(params, data, i, t))
            .product::<f64>();
    });
    total.ln()
}

/// Tie-corrected Mann-Whitney estimate of `P(score_pos > score_neg)`.
pub fn u_statistic_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Macro-AUC percentage by the U-statistic, skipping one-class columns.
pub fn u_statistic_macro_auc(scores: &Array2<f64>, gold: &[usize]) -> f64 {
    let mut aucs = Vec::new();
    for c in 0..scores.ncols() {
        let positive: Vec<bool> = gold.iter().map(|&g| g == c).collect();
        let n_pos = positive.iter().filter(|p| **p).count();
        if n_pos == 0 || n_pos == gold.len() {
            continue;
        }
        aucs.push(u_statistic_auc(&scores.column(c).to_vec(), &positive));
    }
    100.0 * aucs.iter().sum::<f64>() / aucs.len() as f64
}

/// Cell-by-cell joint over `(Y*, Y, X)` for one binary feature.
pub struct FeatureJoint {
    /// `cells[t][y][x]`.
    pub cells: Vec<Vec<[f64; 2]>>,
}

impl FeatureJoint {
    pub fn new(priors: &[f64], rho: &Array2<f64>, p_column: &[f64]) -> Self {
        let k = priors.len();
        let cells = (0..k)
            .map(|t| {
                (0..k)
                    .map(|y| {
                        let base = priors[t] * rho[[y, t]];
                        [base * (1.0 - p_column[t]), base * p_column[t]]
                    })
                    .collect()
            })
            .collect();
        Self { cells }
    }

    pub fn x1(&self) -> f64 {
        self.cells.iter().flatten().map(|c| c[1]).sum()
    }

    /// `P(Y = a, X = 1)`.
    pub fn observed_x1(&self, a: usize) -> f64 {
        self.cells.iter().map(|row| row[a][1]).sum()
    }

    /// `P(Y* = t, X = 1)`.
    pub fn true_x1(&self, t: usize) -> f64 {
        self.cells[t].iter().map(|c| c[1]).sum()
    }

    /// `P(Y = a | X = 1) - P(Y = b | X = 1)`.
    pub fn observed_gap(&self, a: usize, b: usize) -> f64 {
        (self.observed_x1(a) - self.observed_x1(b)) / self.x1()
    }

    pub fn clean_gap(&self, a: usize, b: usize) -> f64 {
        (self.true_x1(a) - self.true_x1(b)) / self.x1()
    }
}

/// Largest central-difference derivative of `Q` over every Gaussian mean and
/// standard deviation, holding the responsibilities fixed.
pub fn max_q_gradient(
    params: &ModelParams,
    g: &noisynb::GaussianParams,
    gamma: &noisynb::Responsibilities,
    data: &noisynb::MixedDataset,
    h: f64,
) -> f64 {
    use noisynb::gaussian::expected_complete_loglik;
    let q = |mu: &Array2<f64>, sigma: &Array2<f64>| {
        let shifted = noisynb::GaussianParams::new(mu.clone(), sigma.clone()).unwrap();
        expected_complete_loglik(params, &shifted, gamma, data).unwrap()
    };
    let mut worst: f64 = 0.0;
    for j in 0..g.d2() {
        for c in 0..g.k() {
            for which in 0..2 {
                let (mut up, mut down) = ((g.mu().clone(), g.sigma().clone()), (g.mu().clone(), g.sigma().clone()));
                let (a, b) = if which == 0 { (&mut up.0, &mut down.0) } else { (&mut up.1, &mut down.1) };
                a[[j, c]] += h;
                b[[j, c]] -= h;
                let grad = (q(&up.0, &up.1) - q(&down.0, &down.1)) / (2.0 * h);
                worst = worst.max(grad.abs());
            }
        }
    }
    worst
}
