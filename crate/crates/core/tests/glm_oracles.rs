use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wmfsel_core::glm::{
    deviance, glm_lambda_grid, glm_lambda_max, glm_mcv, glm_weights, logistic_kkt_residual, logistic_mle,
    logistic_path_solutions, sigmoid, GlmLoss,
};
use wmfsel_core::select::fold_assignment;
use wmfsel_core::GlmDataset64;

fn logistic_data(seed: u64, n: usize, beta: &[f64]) -> GlmDataset64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = beta.len();
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    let eta = x.dot(&Array1::from(beta.to_vec())) - 0.3;
    let y = eta.mapv(|e| f64::from(u8::from(rng.random::<f64>() < sigmoid(e))));
    GlmDataset64::new(x, y).unwrap()
}

/// Plain IRLS on [1, X] with nalgebra's LU.
fn irls(data: &GlmDataset64) -> DVector<f64> {
    let (n, p) = (data.n(), data.p());
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { data.x()[[i, j - 1]] });
    let y = DVector::from_iterator(n, data.y().iter().copied());
    let mut b = DVector::zeros(p + 1);
    for _ in 0..100 {
        let mu = (&x * &b).map(sigmoid);
        let w = mu.map(|m| m * (1.0 - m));
        let xtw = DMatrix::from_fn(p + 1, n, |j, i| x[(i, j)] * w[i]);
        let step = (&xtw * &x).lu().solve(&(x.transpose() * (&y - &mu))).unwrap();
        b += &step;
        if step.amax() < 1e-14 {
            break;
        }
    }
    b
}

#[test]
fn mle_matches_irls() {
    let data = logistic_data(1, 300, &[1.0, -0.7, 0.0, 0.4]);
    let ours = logistic_mle(&data).unwrap();
    let reference = irls(&data);
    assert_abs_diff_eq!(ours.intercept.unwrap(), reference[0], epsilon = 1e-8);
    for j in 0..4 {
        assert_abs_diff_eq!(ours.values[j], reference[j + 1], epsilon = 1e-8);
    }
}

#[test]
fn path_solutions_satisfy_kkt() {
    for seed in 0..4 {
        let data = logistic_data(10 + seed, 200, &[1.5, 1.0, 0.0, 0.0, -0.8, 0.0, 0.0, 0.0]);
        let w = glm_weights(&data, 1.0).unwrap();
        let grid = glm_lambda_grid(glm_lambda_max(&data, w.view()), 40, 1e-3);
        let sols = logistic_path_solutions(&data, w.view(), &grid).unwrap();
        for (lambda, coef) in grid.iter().zip(&sols) {
            assert!(logistic_kkt_residual(&data, w.view(), *lambda, coef) < 1e-6, "seed {seed} λ {lambda}");
        }
    }
}

#[test]
fn lambda_max_gives_intercept_only_fit() {
    let data = logistic_data(3, 150, &[1.0, 0.5, 0.0]);
    let w = Array1::from(vec![1.0, 2.0, 0.5]);
    let top = glm_lambda_max(&data, w.view());
    let sols = logistic_path_solutions(&data, w.view(), &[top * 1.0001, top * 0.5]).unwrap();
    assert!(sols[0].values.iter().all(|&v| v == 0.0));
    let ybar = data.y().mean().unwrap();
    assert_abs_diff_eq!(sols[0].intercept.unwrap(), (ybar / (1.0 - ybar)).ln(), epsilon = 1e-9);
    assert!(sols[1].values.iter().any(|&v| v != 0.0));
}

#[test]
fn intercept_only_cv_deviance_has_closed_form() {
    let data = logistic_data(4, 97, &[0.8, 0.0]);
    let (k, seed) = (5, 77);
    let ours = glm_mcv(&data, &[], k, GlmLoss::Deviance, seed).unwrap();
    let fold = fold_assignment(data.n(), k, seed);
    let y = data.y();
    let mut total = 0.0;
    for f in 0..k {
        let train: Vec<f64> = (0..data.n()).filter(|&i| fold[i] != f).map(|i| y[i]).collect();
        let p = train.iter().sum::<f64>() / train.len() as f64;
        for i in (0..data.n()).filter(|&i| fold[i] == f) {
            total -= 2.0 * if y[i] == 1.0 { p.ln() } else { (1.0 - p).ln() };
        }
    }
    assert_abs_diff_eq!(ours, total / data.n() as f64, epsilon = 1e-10);
}

#[test]
fn deviance_is_twice_the_negative_log_likelihood() {
    let y = Array1::from(vec![1.0, 0.0, 1.0, 1.0]);
    let mu = Array1::from(vec![0.9, 0.2, 0.6, 0.5]);
    let expected = -2.0 * (0.9f64.ln() + 0.8f64.ln() + 0.6f64.ln() + 0.5f64.ln());
    assert_abs_diff_eq!(deviance(y.view(), mu.view()), expected, epsilon = 1e-12);
}
