use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;

use super::{penalty_weights, MfSettings};
use crate::model::{solve_normal_equations, Centered, Dataset};
use crate::path::{last_model_of_size, penalized_path};
use crate::resample::rng_from_seed;
use crate::{Error, Real, Result};

/// Random partition of `0..n` into `k` folds of near-equal size; entry `i`
/// is the fold of row `i`.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

pub(crate) fn split(fold: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, &g) in fold.iter().enumerate() {
        if g == f {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

fn check_folds(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("need 2 ≤ K ≤ n, got K = {k} with n = {n}")));
    }
    Ok(())
}

/// K-fold prediction error of the OLS refit restricted to `model`:
/// `(1/n) Σ_folds ‖y_s − X_{s,M} β̂_{sᶜ,M}‖²`.
pub fn mcv_error<T: Real>(data: &Dataset<T>, model: &[usize], k: usize, seed: u64) -> Result<T> {
    check_folds(data.n(), k)?;
    if let Some(&j) = model.iter().find(|&&j| j >= data.p()) {
        return Err(Error::InvalidInput(format!("model column {j} out of range")));
    }
    let fold = fold_assignment(data.n(), k, seed);
    let xm = data.x().select(Axis(1), model);
    let needed = model.len() + 1 + usize::from(data.has_intercept());
    let mut sse = T::zero();
    for f in 0..k {
        let (train, test) = split(&fold, f);
        if train.len() < needed {
            return Err(Error::FoldTooSmall { rows: train.len(), size: model.len(), needed });
        }
        let xt = xm.select(Axis(0), &train);
        let yt = data.y().select(Axis(0), &train);
        let c = Centered::new(xt.view(), yt.view(), data.has_intercept());
        let eff = train.len() - usize::from(data.has_intercept());
        let beta = if model.is_empty() {
            Array1::zeros(0)
        } else {
            solve_normal_equations(c.x.view(), c.y.view(), T::zero(), eff, false)?
        };
        let coef = c.coefficients(beta);
        let pred = coef.predict(xm.select(Axis(0), &test).view());
        for (a, &i) in test.iter().enumerate() {
            let r = data.y()[i] - pred[a];
            sse += r * r;
        }
    }
    Ok(sse / T::from_usize_lossy(data.n()))
}

/// K-fold prediction error of the penalized path refit on each training
/// fold and read off at its last knot of size `dimension` (or the last knot
/// below it when that size is skipped).
pub fn mcv_error_at_dimension<T: Real>(
    data: &Dataset<T>,
    settings: &MfSettings<T>,
    dimension: usize,
    k: usize,
    seed: u64,
) -> Result<T> {
    check_folds(data.n(), k)?;
    let fold = fold_assignment(data.n(), k, seed);
    let mut sse = T::zero();
    for f in 0..k {
        let (train, test) = split(&fold, f);
        let td = data.select_rows(&train);
        let w = penalty_weights(&td, &settings.penalty)?;
        let path = penalized_path(&td, settings.penalty, w.view(), settings.steps_for(&td))?;
        let coef = match last_model_of_size(&path, dimension) {
            Some(_) => {
                let pt = path.points.iter().rev().find(|pt| pt.active_set.len() == dimension);
                pt.expect("size visited").coefficients.clone()
            }
            None => path
                .points
                .iter()
                .rev()
                .find(|pt| pt.active_set.len() < dimension)
                .expect("empty knot always present")
                .coefficients
                .clone(),
        };
        let test_x = data.x().select(Axis(0), &test);
        let pred = coef.predict(test_x.view());
        for (a, &i) in test.iter().enumerate() {
            let r = data.y()[i] - pred[a];
            sse += r * r;
        }
    }
    Ok(sse / T::from_usize_lossy(data.n()))
}
