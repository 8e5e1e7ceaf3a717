mod common;

use approx::assert_abs_diff_eq;
use common::*;
use ndarray::{array, Array1, Array2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use noisynb::impact::{confusing_class_matrix, constant_rho_matrix, gap_confusing_class, gap_constant_rho, gap_two_class};
use noisynb::math::{log_normal_pdf, normal_pdf};
use noisynb::metrics::{delta_acc, macro_auc};
use noisynb::{
    complete_loglik, e_step, enforce_identifiability, fit_nb, m_step, observed_loglik, posterior_true_label,
    LabeledDataset, ModelParams, Responsibilities,
};
use rand::Rng;

#[test]
fn e_step_and_loglik_match_exhaustive_joint() {
    let mut r = rng(1);
    for _ in 0..60 {
        let (n, d, k) = (r.random_range(1..=6), r.random_range(1..=4), r.random_range(2..=3));
        let params = random_params(&mut r, k, d);
        let data = random_dataset(&mut r, n, d, k, false);
        let gamma = e_step(&params, &data).unwrap();
        let oracle = exhaustive_posteriors(&params, &data);
        for (a, b) in gamma.gamma().iter().zip(oracle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let ll = observed_loglik(&params, &data).unwrap();
        assert_abs_diff_eq!(ll, exhaustive_loglik(&params, &data), epsilon = 1e-10);
    }
}

#[test]
fn identity_noise_collapses_posterior_onto_observed_label() {
    let mut r = rng(2);
    let base = random_params(&mut r, 3, 4);
    let params = ModelParams::without_noise(base.pi().clone(), base.p().clone()).unwrap();
    let data = random_dataset(&mut r, 20, 4, 3, false);
    let gamma = e_step(&params, &data).unwrap();
    for (i, &y) in data.y_observed().iter().enumerate() {
        for c in 0..3 {
            assert_eq!(gamma.gamma()[[i, c]], if c == y { 1.0 } else { 0.0 });
        }
    }
    let with_truth = data.with_true(Some(data.y_observed().to_vec())).unwrap();
    let complete = complete_loglik(&params, &with_truth).unwrap().value;
    assert_abs_diff_eq!(observed_loglik(&params, &data).unwrap(), complete, epsilon = 1e-10);
}

#[test]
fn fully_symmetric_parameters_give_uniform_responsibilities() {
    let k = 3;
    let params = ModelParams::new(
        Array1::from_elem(k, 1.0 / 3.0),
        Array2::from_elem((2, k), 0.3),
        Array2::from_elem((k, k), 1.0 / 3.0),
    )
    .unwrap();
    let mut r = rng(3);
    let data = random_dataset(&mut r, 10, 2, k, false);
    for v in e_step(&params, &data).unwrap().gamma() {
        assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
    }
}

#[test]
fn complete_loglik_matches_term_by_term_sum() {
    let mut r = rng(4);
    for _ in 0..20 {
        let params = random_params(&mut r, 3, 4);
        let data = random_dataset(&mut r, 3, 4, 3, true);
        let t = data.y_true().unwrap();
        let mut expected = 0.0;
        for i in 0..3 {
            expected += params.pi()[t[i]].ln();
            expected += params.rho()[[data.y_observed()[i], t[i]]].ln();
            for j in 0..4 {
                let p = params.p()[[j, t[i]]];
                let x = f64::from(data.x()[[i, j]]);
                expected += x * p.ln() + (1.0 - x) * (1.0 - p).ln();
            }
        }
        assert_abs_diff_eq!(complete_loglik(&params, &data).unwrap().value, expected, epsilon = 1e-12);
    }
}

#[test]
fn complete_loglik_single_term_and_zero_probability_path() {
    let params = ModelParams::without_noise(array![0.5, 0.5], array![[0.8, 0.3]]).unwrap();
    let one = LabeledDataset::new(array![[1u8]], vec![0], Some(vec![0]), 2).unwrap();
    let v = complete_loglik(&params, &one).unwrap();
    assert_abs_diff_eq!(v.value, 0.5f64.ln() + 0.8f64.ln(), epsilon = 1e-15);
    assert_eq!(v.zero_probability_row, None);

    let flipped = LabeledDataset::new(array![[1u8]], vec![1], Some(vec![0]), 2).unwrap();
    let v = complete_loglik(&params, &flipped).unwrap();
    assert_eq!(v.value, f64::NEG_INFINITY);
    assert_eq!(v.zero_probability_row, Some(0));
}

fn ratio(num: u32, den: u32) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Natural log of a positive big integer via its leading bits.
fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(60);
    let top = (v >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_ratio(v: &BigRational) -> f64 {
    ln_bigint(v.numer()) - ln_bigint(v.denom())
}

#[test]
fn posterior_on_long_rows_matches_exact_rational_arithmetic() {
    let (d, k) = (500, 3);
    let mut r = rng(5);
    // probabilities on a 1/1000 grid so the oracle is exact
    let grid: Vec<Vec<u32>> = (0..d)
        .map(|_| (0..k).map(|_| r.random_range(1..1000)).collect())
        .collect();
    let pi_num = [2u32, 3, 5];
    let p = Array2::from_shape_fn((d, k), |(j, c)| f64::from(grid[j][c]) / 1000.0);
    let pi = Array1::from_iter(pi_num.iter().map(|&v| f64::from(v) / 10.0));
    let params = ModelParams::without_noise(pi, p).unwrap();
    for _ in 0..5 {
        let x: Array1<u8> = (0..d).map(|_| r.random_range(0..2u8)).collect();
        let joint: Vec<BigRational> = (0..k)
            .map(|c| {
                let mut v = ratio(pi_num[c], 10);
                for j in 0..d {
                    let pj = grid[j][c];
                    v *= if x[j] == 1 { ratio(pj, 1000) } else { ratio(1000 - pj, 1000) };
                }
                v
            })
            .collect();
        let total = joint.iter().fold(BigRational::zero(), |a, b| a + b);
        let post = posterior_true_label(&params, x.view()).unwrap();
        let mut sum = 0.0;
        for c in 0..k {
            let exact = &joint[c] / &total;
            assert_abs_diff_eq!(post.probabilities[c], exact.to_f64().unwrap(), epsilon = 1e-12);
            let ln_exact = ln_ratio(&exact);
            assert!(post.log_probabilities[c].is_finite());
            assert!(
                (post.log_probabilities[c] - ln_exact).abs() <= 1e-9 * ln_exact.abs().max(1.0),
                "{} vs {ln_exact}",
                post.log_probabilities[c]
            );
            sum += post.probabilities[c];
        }
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
        assert!(total > BigRational::zero() && total < BigRational::one());
    }
}

#[test]
fn posterior_one_feature_bayes_rule() {
    let params = ModelParams::without_noise(array![0.5, 0.5], array![[0.9, 0.1]]).unwrap();
    let post = posterior_true_label(&params, array![1u8].view()).unwrap();
    assert_abs_diff_eq!(post.probabilities[0], 0.9, epsilon = 1e-15);
    assert_abs_diff_eq!(post.probabilities[1], 0.1, epsilon = 1e-15);
}

#[test]
fn fit_nb_closed_form_on_two_instances() {
    let data = LabeledDataset::new(array![[1u8], [0]], vec![0, 1], None, 2).unwrap();
    assert!(fit_nb(&data, 0.0).is_err());
    let params = fit_nb(&data, 1.0).unwrap();
    assert_abs_diff_eq!(params.p()[[0, 0]], 2.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(params.p()[[0, 1]], 1.0 / 3.0, epsilon = 1e-15);
    assert_eq!(params.pi().to_vec(), vec![0.5, 0.5]);
    assert_eq!(params.rho(), &Array2::<f64>::eye(2));
}

#[test]
fn fit_nb_posteriors_match_bayes_enumeration() {
    let mut r = rng(6);
    for _ in 0..20 {
        let (n, d, k) = (r.random_range(3..=20), r.random_range(1..=6), r.random_range(2..=3));
        let data = random_dataset(&mut r, n, d, k, false);
        let params = fit_nb(&data, 1.0).unwrap();
        // smoothed counts recomputed from scratch
        let counts: Vec<f64> = (0..k)
            .map(|c| data.y_observed().iter().filter(|&&y| y == c).count() as f64)
            .collect();
        for i in 0..n {
            let joint: Vec<f64> = (0..k)
                .map(|c| {
                    let mut v = (counts[c] + 1.0) / (n as f64 + k as f64);
                    for j in 0..d {
                        let ones = (0..n)
                            .filter(|&m| data.y_observed()[m] == c && data.x()[[m, j]] == 1)
                            .count() as f64;
                        let pj = (ones + 1.0) / (counts[c] + 2.0);
                        v *= if data.x()[[i, j]] == 1 { pj } else { 1.0 - pj };
                    }
                    v
                })
                .collect();
            let total: f64 = joint.iter().sum();
            let post = posterior_true_label(&params, data.row(i)).unwrap();
            for c in 0..k {
                assert_abs_diff_eq!(post.probabilities[c], joint[c] / total, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn one_hot_m_step_gives_counts_and_confusion_matrix() {
    // six instances, hand-counted
    let x = array![[1u8, 0], [1, 1], [0, 1], [0, 0], [1, 1], [0, 1]];
    let y_true = vec![0, 0, 0, 1, 1, 1];
    let y_obs = vec![0, 1, 0, 1, 1, 0];
    let data = LabeledDataset::new(x, y_obs, Some(y_true.clone()), 2).unwrap();
    let gamma = Responsibilities::one_hot(&y_true, 2);
    let (params, report) = m_step(&gamma, &data).unwrap();
    assert!(report.empty_classes.is_empty());
    assert_abs_diff_eq!(params.pi()[0], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(params.p()[[0, 0]], 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(params.p()[[1, 0]], 2.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(params.p()[[0, 1]], 1.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(params.p()[[1, 1]], 2.0 / 3.0, epsilon = 1e-12);
    let rho = array![[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
    for (a, b) in params.rho().iter().zip(rho.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
    let nb = fit_nb(&data.with_observed(y_true).unwrap(), 0.0).unwrap();
    for (a, b) in params.p().iter().zip(nb.p().iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn uniform_m_step_gives_marginal_columns() {
    let mut r = rng(7);
    let data = random_dataset(&mut r, 30, 3, 3, false);
    let (params, _) = m_step(&Responsibilities::uniform(30, 3), &data).unwrap();
    for c in 0..3 {
        assert_abs_diff_eq!(params.pi()[c], 1.0 / 3.0, epsilon = 1e-12);
        for a in 0..3 {
            let freq = data.y_observed().iter().filter(|&&y| y == a).count() as f64 / 30.0;
            assert_abs_diff_eq!(params.rho()[[a, c]], freq, epsilon = 1e-12);
        }
    }
}

#[test]
fn two_class_relabeling_swaps_columns() {
    let params = ModelParams::new(
        array![0.5, 0.5],
        array![[0.2, 0.9]],
        array![[0.4, 0.7], [0.6, 0.3]],
    )
    .unwrap();
    let (fixed, ident) = enforce_identifiability(&params);
    assert_eq!(ident.permutation, vec![1, 0]);
    assert_eq!(fixed.rho()[[0, 0]], 0.7);
    assert_eq!(fixed.rho()[[1, 1]], 0.6);
    assert_eq!(fixed.p()[[0, 0]], 0.9);
    assert!(!ident.violation());
}

#[test]
fn normal_density_reference_values() {
    // 1/sqrt(2 pi) and exp(-1/2)/sqrt(2 pi) to full double precision
    assert_abs_diff_eq!(normal_pdf(0.0, 0.0, 1.0), 0.398_942_280_401_432_7, epsilon = 1e-16);
    assert_abs_diff_eq!(normal_pdf(1.0, 0.0, 1.0), 0.241_970_724_519_143_37, epsilon = 1e-16);
    let mut r = rng(8);
    for _ in 0..200 {
        let (x, m, s) = (r.random_range(-5.0..5.0), r.random_range(-2.0..2.0), r.random_range(0.1..3.0f64));
        let direct = -((x - m) * (x - m)) / (2.0 * s * s) - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(log_normal_pdf(x, m, s), direct, epsilon = 1e-12);
    }
}

#[test]
fn impact_gaps_match_enumeration() {
    let mut r = rng(9);
    for _ in 0..50 {
        let (p1, p2, rho11) = (r.random_range(0.01..0.99), r.random_range(0.01..0.99), r.random_range(0.5..1.0));
        let rho = array![[rho11, 1.0 - rho11], [1.0 - rho11, rho11]];
        let joint = FeatureJoint::new(&[0.5, 0.5], &rho, &[p1, p2]);
        let gap = gap_two_class(p1, p2, rho11, 1.0 - rho11).unwrap();
        assert_abs_diff_eq!(gap.value, joint.observed_gap(0, 1), epsilon = 1e-12);
        assert!(gap.flags.is_empty());

        let k = r.random_range(3..8);
        let rho_c = r.random_range(0.5..1.0);
        let p: Vec<f64> = (0..k).map(|_| r.random_range(0.01..0.99)).collect();
        let joint = FeatureJoint::new(&vec![1.0 / k as f64; k], &constant_rho_matrix(k, rho_c).unwrap(), &p);
        let gap = gap_constant_rho(rho_c, &p, 0, 1).unwrap();
        assert_abs_diff_eq!(gap.value, joint.observed_gap(0, 1), epsilon = 1e-12);
        assert_abs_diff_eq!(gap.clean, joint.clean_gap(0, 1), epsilon = 1e-12);
    }
    let p = [0.7, 0.3, 0.5];
    let joint = FeatureJoint::new(&[1.0 / 3.0; 3], &constant_rho_matrix(3, 0.8).unwrap(), &p);
    assert_abs_diff_eq!(gap_constant_rho(0.8, &p, 0, 1).unwrap().value, joint.observed_gap(0, 1), epsilon = 1e-12);
    assert_eq!(gap_constant_rho(0.25, &[0.7, 0.3, 0.5, 0.1], 0, 1).unwrap().value, 0.0);
}

#[test]
fn confusing_class_inversion_and_equal_features() {
    let (k, rho) = (30, 0.9);
    let matrix = confusing_class_matrix(k, rho).unwrap();
    for (p1, p2) in [(0.05, 0.6), (0.3, 0.3), (0.5, 0.2)] {
        let mut p = vec![p2; k];
        p[0] = p1;
        let joint = FeatureJoint::new(&vec![1.0 / k as f64; k], &matrix, &p);
        let gap = gap_confusing_class(k, rho, p1, p2).unwrap();
        assert_abs_diff_eq!(gap.value, joint.observed_x1(0) - joint.observed_x1(2), epsilon = 1e-12);
        assert_abs_diff_eq!(gap.clean, joint.clean_gap(0, 2), epsilon = 1e-12);
    }
    let gap = gap_confusing_class(k, rho, 0.05, 0.6).unwrap();
    assert!(gap.value > 0.0 && gap.clean < 0.0 && gap.is_inversion());
}

#[test]
fn macro_auc_matches_u_statistic() {
    let mut r = rng(10);
    for _ in 0..30 {
        let (n, k) = (r.random_range(4..25), r.random_range(2..5));
        let gold: Vec<usize> = (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect();
        // coarse scores so that ties occur
        let scores = Array2::from_shape_simple_fn((n, k), || f64::from(r.random_range(0..5u8)) / 4.0);
        let got = macro_auc(&scores, &gold).unwrap().value;
        assert_abs_diff_eq!(got, u_statistic_macro_auc(&scores, &gold), epsilon = 1e-12);
    }
}

#[test]
fn delta_acc_reference_rows() {
    assert_abs_diff_eq!(delta_acc(66.0, 88.3), -22.3, epsilon = 1e-9);
    assert_eq!(delta_acc(95.1, 95.1), 0.0);
}
