//! Logistic-regression counterpart of the selection pipeline: maximum
//! likelihood pilot, warm-started adaptive-LASSO coordinate descent on a λ
//! grid, multi-fold CV with deviance or misclassification loss, and the
//! weighted maximum-frequency selector.
//!
//! Objective along the path: `Σ_i [−y_i η_i + log(1 + e^{η_i})] + λ Σ_j ω_j|β_j|`
//! with an unpenalized intercept.

use log::{debug, warn};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::linalg::{cholesky, cholesky_solve, max_abs, mean};
use crate::model::{adaptive_weights, CoefficientVector, PenaltySpec};
use crate::path::{soft_threshold, SolutionPath, TransitionPoint};
use crate::resample::{derive_seed, resample_indices};
use crate::select::{
    fold_assignment, softmax_weights, Criterion, CvConfig, DimensionDiagnostics, DimensionTable, Method,
    SelectionResult, DEFAULT_EBIC_XI,
};
use crate::{Error, Real, Result};

/// Ridge level used when a fold or pilot refit is separable.
pub const SEPARATION_RIDGE: f64 = 1e-4;
const DIVERGENCE_NORM: f64 = 1e3;
const PROB_CLAMP: f64 = 1e-12;

/// Binary-response data. Column indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmDataset<T> {
    x: Array2<T>,
    y: Array1<T>,
    truth: Option<Vec<usize>>,
}

impl<T: Real> GlmDataset<T> {
    pub fn new(x: Array2<T>, y: Array1<T>) -> Result<Self> {
        let (n, _) = x.dim();
        if n < 2 {
            return Err(Error::InvalidInput(format!("need n ≥ 2, got {n}")));
        }
        if y.len() != n {
            return Err(Error::InvalidInput(format!("response has length {} but design has {n} rows", y.len())));
        }
        if let Some((i, j)) = x.indexed_iter().find(|(_, v)| !v.is_finite()).map(|(ix, _)| ix) {
            return Err(Error::NonFiniteInput(format!("X[{i}, {j}]")));
        }
        if let Some(i) = y.iter().position(|&v| v != T::zero() && v != T::one()) {
            return Err(Error::InvalidInput(format!("response entry {i} is not 0 or 1")));
        }
        let ones = y.iter().filter(|&&v| v == T::one()).count();
        if ones == 0 || ones == n {
            return Err(Error::InvalidInput("response needs at least one 0 and one 1".into()));
        }
        Ok(GlmDataset { x, y, truth: None })
    }

    pub fn with_truth(mut self, mut truth: Vec<usize>) -> Result<Self> {
        truth.sort_unstable();
        truth.dedup();
        if truth.iter().any(|&j| j >= self.p()) {
            return Err(Error::InvalidInput("truth index out of range".into()));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, T> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, T> {
        self.y.view()
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let d = GlmDataset::new(self.x.select(Axis(0), rows), self.y.select(Axis(0), rows))?;
        Ok(GlmDataset { truth: self.truth.clone(), ..d })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        GlmDataset { x: self.x.select(Axis(1), cols), y: self.y.clone(), truth: None }
    }
}

#[inline]
pub fn sigmoid<T: Real>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + e^η)` without overflow.
#[inline]
fn softplus<T: Real>(eta: T) -> T {
    if eta > T::zero() {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// Negative log-likelihood `Σ −yη + log(1+e^η)`.
pub fn neg_log_likelihood<T: Real>(y: ArrayView1<'_, T>, eta: ArrayView1<'_, T>) -> T {
    y.iter().zip(eta.iter()).map(|(&yi, &e)| softplus(e) - yi * e).sum()
}

/// Fitted probabilities.
pub fn predict_proba<T: Real>(coef: &CoefficientVector<T>, x: ArrayView2<'_, T>) -> Array1<T> {
    coef.predict(x).mapv(sigmoid)
}

/// Total deviance `−2 Σ [y log μ + (1−y) log(1−μ)]`, μ clamped away from 0 and 1.
pub fn deviance<T: Real>(y: ArrayView1<'_, T>, mu: ArrayView1<'_, T>) -> T {
    let lo = T::lit(PROB_CLAMP);
    let hi = T::one() - lo;
    let two = T::lit(2.0);
    y.iter()
        .zip(mu.iter())
        .map(|(&yi, &m)| {
            let m = m.max(lo).min(hi);
            -two * (yi * m.ln() + (T::one() - yi) * (T::one() - m).ln())
        })
        .sum()
}

/// `I(ŷ > threshold)` elementwise.
pub fn classify<T: Real>(probabilities: ArrayView1<'_, T>, threshold: T) -> Result<Vec<u8>> {
    if !(threshold > T::zero() && threshold < T::one()) {
        return Err(Error::InvalidInput(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(probabilities.iter().map(|&p| u8::from(p > threshold)).collect())
}

fn logit<T: Real>(p: T) -> T {
    let lo = T::lit(PROB_CLAMP);
    let p = p.max(lo).min(T::one() - lo);
    (p / (T::one() - p)).ln()
}

fn grad_tol<T: Real>(n: usize) -> T {
    T::lit(1e-8).max(T::lit(100.0) * T::epsilon() * T::from_usize_lossy(n))
}

/// Newton–Raphson for `NLL + λ₂‖β‖²` (slopes only) with step halving.
/// With `lambda2 = 0` and `guard` set, growth of the slopes beyond the
/// divergence norm is reported as separation.
fn newton_logistic<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    lambda2: T,
    guard: bool,
) -> Result<CoefficientVector<T>> {
    let (n, p) = x.dim();
    let q = p + 1;
    let mut z = Array2::<T>::ones((n, q));
    z.slice_mut(ndarray::s![.., 1..]).assign(&x);
    let mut theta = Array1::<T>::zeros(q);
    theta[0] = logit(mean(y));
    let objective = |th: &Array1<T>| {
        let eta = z.dot(th);
        let pen: T = th.iter().skip(1).map(|b| *b * *b).sum::<T>() * lambda2;
        neg_log_likelihood(y, eta.view()) + pen
    };
    let tol = grad_tol::<T>(n);
    let mut obj = objective(&theta);
    for _iter in 0..200 {
        let eta = z.dot(&theta);
        let mu = eta.mapv(sigmoid);
        let mut grad = z.t().dot(&(&y - &mu));
        for j in 1..q {
            grad[j] -= T::lit(2.0) * lambda2 * theta[j];
        }
        if guard && max_abs((&y - &mu).view()) < T::lit(1e-6) {
            let norm = theta.iter().skip(1).map(|b| *b * *b).sum::<T>().sqrt();
            return Err(Error::Separation(norm.to_f64_lossy()));
        }
        if max_abs(grad.view()) < tol {
            return Ok(CoefficientVector {
                values: theta.slice(ndarray::s![1..]).to_owned(),
                intercept: Some(theta[0]),
            });
        }
        let w = mu.mapv(|m| (m * (T::one() - m)).max(T::lit(1e-12)));
        let zw = &z * &w.view().insert_axis(Axis(1));
        let mut h = z.t().dot(&zw);
        for j in 1..q {
            h[[j, j]] += T::lit(2.0) * lambda2;
        }
        let l = cholesky(h.view(), T::epsilon() * T::lit(16.0))
            .ok_or_else(|| Error::SingularDesign("logistic Hessian is singular".into()))?;
        let step = cholesky_solve(&l, grad.view());
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &theta + &(&step * t);
            let o = objective(&cand);
            if o <= obj + T::lit(1e-12) * obj.abs().max(T::one()) {
                theta = cand;
                obj = o;
                accepted = true;
                break;
            }
            t *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
        let norm = theta.iter().skip(1).map(|b| *b * *b).sum::<T>().sqrt();
        if guard && norm > T::lit(DIVERGENCE_NORM) {
            return Err(Error::Separation(norm.to_f64_lossy()));
        }
    }
    // final check after the loop
    let eta = z.dot(&theta);
    let mu = eta.mapv(sigmoid);
    let mut grad = z.t().dot(&(&y - &mu));
    for j in 1..q {
        grad[j] -= T::lit(2.0) * lambda2 * theta[j];
    }
    let g = max_abs(grad.view());
    if g < tol * T::lit(100.0) {
        return Ok(CoefficientVector { values: theta.slice(ndarray::s![1..]).to_owned(), intercept: Some(theta[0]) });
    }
    let norm = theta.iter().skip(1).map(|b| *b * *b).sum::<T>().sqrt();
    if guard && norm > T::lit(DIVERGENCE_NORM / 10.0) {
        return Err(Error::Separation(norm.to_f64_lossy()));
    }
    Err(Error::NoConvergence { sweeps: 200, residual: g.to_f64_lossy() })
}

/// Logistic maximum likelihood estimate with intercept.
pub fn logistic_mle<T: Real>(data: &GlmDataset<T>) -> Result<CoefficientVector<T>> {
    if data.n() <= data.p() + 1 {
        return Err(Error::SingularDesign(format!(
            "logistic MLE needs n > p + 1 (n = {}, p = {})",
            data.n(),
            data.p()
        )));
    }
    newton_logistic(data.x(), data.y(), T::zero(), true)
}

/// Ridge-stabilized logistic fit, `NLL + λ₂‖β‖²`.
pub fn logistic_ridge<T: Real>(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>, lambda2: T) -> Result<CoefficientVector<T>> {
    newton_logistic(x, y, lambda2, false)
}

/// Unpenalized fit on `x`, falling back to [`SEPARATION_RIDGE`] when the
/// MLE does not exist.
pub fn logistic_refit<T: Real>(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>) -> Result<CoefficientVector<T>> {
    if x.ncols() == 0 {
        return Ok(CoefficientVector { values: Array1::zeros(0), intercept: Some(logit(mean(y))) });
    }
    let mle = if x.nrows() > x.ncols() + 1 {
        newton_logistic(x, y, T::zero(), true)
    } else {
        Err(Error::SingularDesign("too few rows".into()))
    };
    match mle {
        Ok(c) => Ok(c),
        Err(e @ (Error::Separation(_) | Error::SingularDesign(_) | Error::NoConvergence { .. })) => {
            debug!("logistic refit falls back to ridge: {e}");
            logistic_ridge(x, y, T::lit(SEPARATION_RIDGE))
        }
        Err(e) => Err(e),
    }
}

/// `λ_max = max_j |X_jᵀ(y − ȳ)| / ω_j`.
pub fn glm_lambda_max<T: Real>(data: &GlmDataset<T>, weights: ArrayView1<'_, T>) -> T {
    let ym = mean(data.y());
    let r = data.y().mapv(|v| v - ym);
    let g = data.x().t().dot(&r);
    g.iter().zip(weights.iter()).map(|(&gj, &w)| gj.abs() / w).fold(T::zero(), T::max)
}

/// `count` log-spaced values from `λ_max` down to `ratio·λ_max`.
pub fn glm_lambda_grid<T: Real>(lambda_max: T, count: usize, ratio: T) -> Vec<T> {
    if count <= 1 {
        return vec![lambda_max];
    }
    let lo = ratio.ln();
    (0..count).map(|i| lambda_max * (lo * T::from_usize_lossy(i) / T::from_usize_lossy(count - 1)).exp()).collect()
}

/// Max violation of the penalized-likelihood KKT conditions at `λ`.
pub fn logistic_kkt_residual<T: Real>(
    data: &GlmDataset<T>,
    weights: ArrayView1<'_, T>,
    lambda: T,
    coef: &CoefficientVector<T>,
) -> T {
    let mu = predict_proba(coef, data.x());
    kkt_from_mu(data.x(), data.y(), weights, lambda, &coef.values, mu.view())
}

/// Penalized objective and the linear predictor it was evaluated at.
fn penalized_objective<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
    lambda: T,
    b0: T,
    beta: &Array1<T>,
) -> (T, Array1<T>) {
    let eta = x.dot(beta).mapv(|v| v + b0);
    let pen: T = beta.iter().zip(weights.iter()).map(|(b, w)| b.abs() * *w).sum();
    (neg_log_likelihood(y, eta.view()) + lambda * pen, eta)
}

/// Penalized fit at one λ by proximal Newton, warm-started from `start`.
/// Each outer step forms the weighted Gram matrix of the IRLS quadratic and
/// solves the penalized quadratic by coordinate descent on that matrix.
fn logistic_cd<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
    lambda: T,
    start: (T, Array1<T>),
    kkt_tol: T,
) -> Result<(T, Array1<T>)> {
    let p = x.ncols();
    let (mut b0, mut beta) = start;
    let (mut obj, eta) = penalized_objective(x, y, weights, lambda, b0, &beta);
    let mut mu = eta.mapv(sigmoid);
    let mut residual = kkt_from_mu(x, y, weights, lambda, &beta, mu.view());
    if residual < kkt_tol {
        return Ok((b0, beta));
    }
    let max_outer = 500;
    for _outer in 0..max_outer {
        let w = mu.mapv(|m| (m * (T::one() - m)).max(T::lit(1e-6)));
        let resid = &y - &mu;
        let xw = &x * &w.view().insert_axis(Axis(1));
        let h = xw.t().dot(&x);
        let h0 = xw.sum_axis(Axis(0));
        let h00 = w.sum();
        // c = Zᵀ(y − μ) − H δ for the step δ taken so far
        let mut c0 = resid.sum();
        let mut c = x.t().dot(&resid);
        let mut nb0 = b0;
        let mut nbeta = beta.clone();
        let inner_tol = (kkt_tol * T::lit(0.1)).max(residual * T::lit(1e-2));
        let mut full = true;
        for _inner in 0..100_000 {
            let mut change = T::zero();
            let s0 = c0 / h00;
            if s0 != T::zero() {
                nb0 += s0;
                c0 -= h00 * s0;
                c.scaled_add(-s0, &h0);
                change = change.max((s0 * h00).abs());
            }
            for j in 0..p {
                let hjj = h[[j, j]];
                if hjj == T::zero() || (!full && nbeta[j] == T::zero()) {
                    continue;
                }
                let old = nbeta[j];
                let new = soft_threshold(c[j] + hjj * old, lambda * weights[j]) / hjj;
                let d = new - old;
                if d != T::zero() {
                    nbeta[j] = new;
                    c0 -= h0[j] * d;
                    c.scaled_add(-d, &h.row(j));
                    change = change.max((d * hjj).abs());
                }
            }
            let converged = change < inner_tol;
            if converged && full {
                break;
            }
            // cycle on the active set until it settles, then confirm with a full sweep
            full = converged;
        }
        // damped step on the true objective
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let cb0 = b0 + (nb0 - b0) * t;
            let cbeta = &beta + &((&nbeta - &beta) * t);
            let (o, eta) = penalized_objective(x, y, weights, lambda, cb0, &cbeta);
            if o <= obj + T::lit(1e-13) * obj.abs().max(T::one()) {
                b0 = cb0;
                beta = cbeta;
                obj = o;
                mu = eta.mapv(sigmoid);
                accepted = true;
                break;
            }
            t *= T::lit(0.5);
        }
        residual = kkt_from_mu(x, y, weights, lambda, &beta, mu.view());
        if residual < kkt_tol {
            return Ok((b0, beta));
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence { sweeps: max_outer, residual: residual.to_f64_lossy() })
}

fn kkt_from_mu<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    weights: ArrayView1<'_, T>,
    lambda: T,
    beta: &Array1<T>,
    mu: ArrayView1<'_, T>,
) -> T {
    let r = &y - &mu;
    let g = x.t().dot(&r);
    let mut worst = r.sum().abs();
    for j in 0..x.ncols() {
        let t = lambda * weights[j];
        let b = beta[j];
        let v = if b != T::zero() { (g[j] - t * b.signum()).abs() } else { (g[j].abs() - t).max(T::zero()) };
        worst = worst.max(v);
    }
    worst
}

fn validate_glm_weights<T: Real>(weights: ArrayView1<'_, T>, p: usize) -> Result<()> {
    if weights.len() != p || weights.iter().any(|w| !(*w > T::zero()) || !w.is_finite()) {
        return Err(Error::InvalidInput("weights must be positive, finite and of length p".into()));
    }
    Ok(())
}

/// Solutions at every grid value (warm-started, in grid order).
pub fn logistic_path_solutions<T: Real>(
    data: &GlmDataset<T>,
    weights: ArrayView1<'_, T>,
    lambda_grid: &[T],
) -> Result<Vec<CoefficientVector<T>>> {
    validate_glm_weights(weights, data.p())?;
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l > T::zero())) {
        return Err(Error::InvalidInput("λ grid must be nonempty and positive".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("λ grid must be strictly descending".into()));
    }
    let scale = glm_lambda_max(data, Array1::ones(data.p()).view()).max(T::one());
    let kkt_tol = T::lit(1e-9) * scale;
    let mut state = (logit(mean(data.y())), Array1::<T>::zeros(data.p()));
    let mut out = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        state = logistic_cd(data.x(), data.y(), weights, lambda, state, kkt_tol)?;
        out.push(CoefficientVector { values: state.1.clone(), intercept: Some(state.0) });
    }
    Ok(out)
}

/// Adaptive-LASSO logistic path on `lambda_grid`. Knots are the last grid
/// value of every run with an unchanged active set, so `points[0]` is the
/// empty model when `lambda_grid[0] ≥ λ_max`.
pub fn logistic_adaptive_lasso_path<T: Real>(
    data: &GlmDataset<T>,
    weights: ArrayView1<'_, T>,
    lambda_grid: &[T],
) -> Result<SolutionPath<T>> {
    let sols = logistic_path_solutions(data, weights, lambda_grid)?;
    Ok(knots_from_solutions(&sols, lambda_grid, weights.to_owned()))
}

fn knots_from_solutions<T: Real>(sols: &[CoefficientVector<T>], grid: &[T], weights: Array1<T>) -> SolutionPath<T> {
    let mut points: Vec<TransitionPoint<T>> = Vec::new();
    for (i, s) in sols.iter().enumerate() {
        let support = s.support();
        let last_of_run = i + 1 == sols.len() || sols[i + 1].support() != support;
        if last_of_run {
            points.push(TransitionPoint {
                step: points.len(),
                lambda: grid[i],
                active_set: support,
                coefficients: s.clone(),
            });
        }
    }
    SolutionPath { points, penalty: PenaltySpec::adaptive_lasso(), weights, max_steps: grid.len(), rescale: T::one() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlmLoss {
    #[default]
    Deviance,
    Misclass,
}

impl std::str::FromStr for GlmLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deviance" => Ok(GlmLoss::Deviance),
            "misclass" => Ok(GlmLoss::Misclass),
            other => Err(Error::InvalidInput(format!("unknown loss `{other}`"))),
        }
    }
}

/// K-fold CV loss of the unpenalized logistic refit on `model`, averaged
/// per observation.
pub fn glm_mcv<T: Real>(data: &GlmDataset<T>, model: &[usize], k: usize, loss: GlmLoss, seed: u64) -> Result<T> {
    let n = data.n();
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("need 2 ≤ K ≤ n, got K = {k} with n = {n}")));
    }
    if model.iter().any(|&j| j >= data.p()) {
        return Err(Error::InvalidInput("model column out of range".into()));
    }
    let fold = fold_assignment(n, k, seed);
    let xm = data.x().select(Axis(1), model);
    let mut total = T::zero();
    for f in 0..k {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold[i] != f);
        let xt = xm.select(Axis(0), &train);
        let yt = data.y().select(Axis(0), &train);
        let coef = logistic_refit(xt.view(), yt.view())?;
        let mu = predict_proba(&coef, xm.select(Axis(0), &test).view());
        let ys = data.y().select(Axis(0), &test);
        total += match loss {
            GlmLoss::Deviance => deviance(ys.view(), mu.view()),
            GlmLoss::Misclass => {
                let labels = classify(mu.view(), T::lit(0.5))?;
                T::from_usize_lossy(
                    labels.iter().zip(ys.iter()).filter(|(l, y)| T::from_u8(**l).unwrap() != **y).count(),
                )
            }
        };
    }
    Ok(total / T::from_usize_lossy(n))
}

/// Settings of the logistic selection pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmSettings<T> {
    pub gamma: T,
    pub replicates: usize,
    pub grid_len: usize,
    /// Smallest grid value as a fraction of `λ_max`.
    pub grid_ratio: T,
}

impl<T: Real> Default for GlmSettings<T> {
    fn default() -> Self {
        GlmSettings { gamma: T::one(), replicates: 100, grid_len: 100, grid_ratio: T::lit(1e-4) }
    }
}

/// Adaptive weights from the MLE (ridge-stabilized when separable).
pub fn glm_weights<T: Real>(data: &GlmDataset<T>, gamma: T) -> Result<Array1<T>> {
    let pilot = match logistic_mle(data) {
        Ok(c) => c,
        Err(Error::Separation(_) | Error::SingularDesign(_) | Error::NoConvergence { .. }) => {
            logistic_ridge(data.x(), data.y(), T::lit(SEPARATION_RIDGE))?
        }
        Err(e) => return Err(e),
    };
    Ok(adaptive_weights(&pilot, gamma))
}

/// Full-data adaptive-LASSO logistic path on the default grid.
pub fn glm_default_path<T: Real>(data: &GlmDataset<T>, settings: &GlmSettings<T>) -> Result<SolutionPath<T>> {
    let w = glm_weights(data, settings.gamma)?;
    let grid = glm_lambda_grid(glm_lambda_max(data, w.view()), settings.grid_len, settings.grid_ratio);
    logistic_adaptive_lasso_path(data, w.view(), &grid)
}

/// Tally of the last model of each size over `B` paired-bootstrap paths.
pub fn glm_mf_table<T: Real>(
    data: &GlmDataset<T>,
    settings: &GlmSettings<T>,
    master_seed: u64,
) -> Result<DimensionTable> {
    if settings.replicates == 0 {
        return Err(Error::InvalidInput("need at least one bootstrap replicate".into()));
    }
    let p = data.p();
    let per: Vec<Option<Vec<Vec<usize>>>> = (0..settings.replicates)
        .into_par_iter()
        .map(|b| {
            let rows = resample_indices(data.n(), derive_seed(master_seed, b as u64, 0));
            let fit = data.select_rows(&rows).and_then(|s| glm_default_path(&s, settings));
            match fit {
                Ok(path) => Some((1..=p).filter_map(|j| crate::path::last_model_of_size(&path, j)).collect()),
                Err(e) => {
                    warn!("bootstrap replicate {b} dropped: {e}");
                    None
                }
            }
        })
        .collect();
    let mut table = DimensionTable::new(p, settings.replicates);
    for models in per.into_iter().flatten() {
        for m in models {
            table.record(m);
        }
    }
    Ok(table)
}

/// Weighted maximum frequency for logistic regression. `T̂_n(j)` is the CV
/// mean deviance of `M_j`; the temperature is `c·D̂` with `D̂` the CV mean
/// deviance of the full model (or `cfg.sigma2` when given).
pub fn glm_wmf_select<T: Real>(
    data: &GlmDataset<T>,
    settings: &GlmSettings<T>,
    cfg: &CvConfig<T>,
    master_seed: u64,
) -> Result<SelectionResult<T>> {
    cfg.validate(data.n())?;
    let table = glm_mf_table(data, settings, master_seed)?;
    glm_wmf_select_from_table(data, &table, cfg, master_seed)
}

/// [`glm_wmf_select`] on an already tallied table.
pub fn glm_wmf_select_from_table<T: Real>(
    data: &GlmDataset<T>,
    table: &DimensionTable,
    cfg: &CvConfig<T>,
    master_seed: u64,
) -> Result<SelectionResult<T>> {
    cfg.validate(data.n())?;
    let cv_seed = derive_seed(master_seed, u64::MAX, 0);
    let p = data.p();
    let scale = match cfg.sigma2 {
        Some(s) => s,
        None => {
            let all: Vec<usize> = (0..p).collect();
            glm_mcv(data, &all, cfg.folds, GlmLoss::Deviance, cv_seed)?
        }
    };
    let errors: Vec<T> = (1..p)
        .map(|j| match table.model(j) {
            Some(m) => glm_mcv(data, m, cfg.folds, GlmLoss::Deviance, cv_seed).unwrap_or_else(|e| {
                warn!("T̂ at dimension {j} unavailable: {e}");
                T::infinity()
            }),
            None => T::infinity(),
        })
        .collect();
    let weights = softmax_weights(&errors, cfg.c * scale)?;
    let b = T::from_usize_lossy(table.replicates());
    let mut best: Option<(usize, T)> = None;
    let mut diagnostics = Vec::new();
    for j in 1..p {
        let mf = T::from_usize_lossy(table.mf(j));
        let wmf = weights[j - 1] * mf;
        if mf > T::zero() && wmf > T::zero() && best.is_none_or(|(_, v)| wmf >= v) {
            best = Some((j, wmf));
        }
        diagnostics.push(DimensionDiagnostics {
            dimension: j,
            mf_frequency: mf / b,
            model: table.model(j).map(<[usize]>::to_vec),
            mcv: Some(errors[j - 1]),
            weight: Some(weights[j - 1]),
            wmf: Some(wmf),
        });
    }
    let (dimension, _) = best.ok_or(Error::EmptyTable)?;
    Ok(SelectionResult {
        dimension,
        model: table.model(dimension).expect("visited").to_vec(),
        method: Method::Wmf,
        diagnostics,
        knot_scores: Vec::new(),
        knot: None,
    })
}

/// Criteria on the knots of a logistic path, with deviance in place of
/// `n log(SSE/n)`: BIC = `D + k log n`, EBIC adds `2ξ log C(p,k)`,
/// GIC = `D + log(log n) log(p) k`, Cp (AIC analogue) = `D + 2k`; the CV
/// variants use fold deviance.
pub fn glm_criterion_select<T: Real>(
    data: &GlmDataset<T>,
    path: &SolutionPath<T>,
    criterion: Criterion,
    cfg: &CvConfig<T>,
) -> Result<SelectionResult<T>> {
    let n = data.n();
    let nf = T::from_usize_lossy(n);
    let p = data.p();
    let sizes: Vec<usize> = path.points.iter().map(|pt| pt.active_set.len()).collect();
    let scores: Vec<T> = match criterion {
        Criterion::CvMin | Criterion::Cv1se => {
            cfg.validate(n)?;
            let (mean, se) = glm_path_cv(data, path, cfg)?;
            let kmin = argmin_first(&mean);
            let knot = if criterion == Criterion::CvMin {
                kmin
            } else {
                (0..=kmin).find(|&k| mean[k] <= mean[kmin] + se[kmin] && sizes[k] <= sizes[kmin]).unwrap_or(kmin)
            };
            return Ok(criterion_result(path, criterion, mean, knot));
        }
        _ => path
            .points
            .iter()
            .map(|pt| {
                let d = deviance(data.y(), predict_proba(&pt.coefficients, data.x()).view());
                let k = pt.active_set.len();
                let kf = T::from_usize_lossy(k);
                match criterion {
                    Criterion::Bic => d + kf * nf.ln(),
                    Criterion::Ebic => {
                        d + kf * nf.ln() + T::lit(2.0 * DEFAULT_EBIC_XI * crate::select::ln_choose(p, k))
                    }
                    Criterion::Gic => d + nf.ln().ln() * T::from_usize_lossy(p).ln() * kf,
                    _ => d + T::lit(2.0) * kf,
                }
            })
            .collect(),
    };
    let knot = argmin_first(&scores);
    Ok(criterion_result(path, criterion, scores, knot))
}

fn criterion_result<T: Real>(
    path: &SolutionPath<T>,
    criterion: Criterion,
    scores: Vec<T>,
    knot: usize,
) -> SelectionResult<T> {
    let pt = &path.points[knot];
    SelectionResult {
        dimension: pt.active_set.len(),
        model: pt.active_set.clone(),
        method: criterion.method(),
        diagnostics: Vec::new(),
        knot_scores: scores,
        knot: Some(knot),
    }
}

fn argmin_first<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = k;
        }
    }
    best
}

fn glm_path_cv<T: Real>(data: &GlmDataset<T>, path: &SolutionPath<T>, cfg: &CvConfig<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = data.n();
    let k = cfg.folds;
    let fold = fold_assignment(n, k, cfg.seed);
    let m = path.len();
    let mut per_fold = vec![vec![T::zero(); k]; m];
    let mut total = vec![T::zero(); m];
    for f in 0..k {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold[i] != f);
        let td = data.select_rows(&train)?;
        let ratio = T::from_usize_lossy(train.len()) / T::from_usize_lossy(n);
        let grid: Vec<T> = path.points.iter().map(|pt| pt.lambda * ratio).collect();
        let sols = logistic_path_solutions(&td, path.weights.view(), &grid)?;
        let tx = data.x().select(Axis(0), &test);
        let ty = data.y().select(Axis(0), &test);
        for (kk, s) in sols.iter().enumerate() {
            let d = deviance(ty.view(), predict_proba(s, tx.view()).view());
            per_fold[kk][f] = d / T::from_usize_lossy(test.len());
            total[kk] += d;
        }
    }
    let kf = T::from_usize_lossy(k);
    let mean = total.iter().map(|t| *t / T::from_usize_lossy(n)).collect();
    let se = per_fold
        .iter()
        .map(|v| {
            let mu = v.iter().copied().sum::<T>() / kf;
            (v.iter().map(|x| (*x - mu) * (*x - mu)).sum::<T>() / (kf - T::one()) / kf).sqrt()
        })
        .collect();
    Ok((mean, se))
}
