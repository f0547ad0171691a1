//! Datasets, coefficient vectors and the unpenalized / ridge baselines that
//! supply pilot estimates for the adaptive weights.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky, cholesky_solve, column_means, gram, mean, symmetric_eigenvalues};
use crate::{Error, Real, Result};

/// Pilot entries smaller than this are clamped before exponentiation.
pub const WEIGHT_FLOOR: f64 = 1e-8;

/// Default ridge grid for pilot tuning: 10⁻³, 10⁻², …, 10³.
pub const DEFAULT_RIDGE_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

/// Largest condition number of the (centered) Gram matrix accepted by
/// [`ols_fit`], as a multiple of `1/ε`.
fn max_condition<T: Real>() -> T {
    T::lit(1e-2) / T::epsilon()
}

/// Regression data: an `n × p` design and a response.
///
/// Column indices are zero-based everywhere in the library. By default every
/// fit centers `y` and the columns of `X` and reports the intercept
/// separately; [`Dataset::without_intercept`] turns that off.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Array2<T>,
    y: Array1<T>,
    truth: Option<Vec<usize>>,
    intercept: bool,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Array2<T>, y: Array1<T>) -> Result<Self> {
        let (n, p) = x.dim();
        if n < 2 || p < 2 {
            return Err(Error::InvalidInput(format!("dataset needs n ≥ 2 and p ≥ 2, got n = {n}, p = {p}")));
        }
        if y.len() != n {
            return Err(Error::InvalidInput(format!("response has length {} but design has {n} rows", y.len())));
        }
        if let Some((i, j)) = x.indexed_iter().find(|(_, v)| !v.is_finite()).map(|(ix, _)| ix) {
            return Err(Error::NonFiniteInput(format!("X[{i}, {j}]")));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(format!("y[{i}]")));
        }
        Ok(Dataset { x, y, truth: None, intercept: true })
    }

    /// Attaches the true support (zero-based, simulation only).
    pub fn with_truth(mut self, mut truth: Vec<usize>) -> Result<Self> {
        truth.sort_unstable();
        truth.dedup();
        if let Some(&j) = truth.iter().find(|&&j| j >= self.p()) {
            return Err(Error::InvalidInput(format!("truth index {j} out of range for p = {}", self.p())));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn without_intercept(mut self) -> Self {
        self.intercept = false;
        self
    }

    pub fn with_intercept(mut self, intercept: bool) -> Self {
        self.intercept = intercept;
        self
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

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Rows available for slope estimation after centering.
    pub fn effective_n(&self) -> usize {
        self.n() - usize::from(self.intercept)
    }

    /// Same design with a replacement response.
    pub fn with_response(&self, y: Array1<T>) -> Result<Self> {
        let d = Dataset::new(self.x.clone(), y)?;
        Ok(Dataset { truth: self.truth.clone(), intercept: self.intercept, ..d })
    }

    /// Rows `rows` (with repetition allowed), keeping truth and intercept mode.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            truth: self.truth.clone(),
            intercept: self.intercept,
        }
    }

    pub(crate) fn centered(&self) -> Centered<T> {
        Centered::new(self.x.view(), self.y.view(), self.intercept)
    }
}

/// Design and response with column means removed (when fitting an intercept).
#[derive(Debug, Clone)]
pub(crate) struct Centered<T> {
    pub x: Array2<T>,
    pub y: Array1<T>,
    pub x_mean: Array1<T>,
    pub y_mean: T,
    pub intercept: bool,
}

impl<T: Real> Centered<T> {
    pub fn new(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>, intercept: bool) -> Self {
        if intercept {
            let x_mean = column_means(x);
            let y_mean = mean(y);
            let xc = &x - &x_mean.view().insert_axis(Axis(0));
            let yc = y.mapv(|v| v - y_mean);
            Centered { x: xc, y: yc, x_mean, y_mean, intercept }
        } else {
            Centered {
                x: x.to_owned(),
                y: y.to_owned(),
                x_mean: Array1::zeros(x.ncols()),
                y_mean: T::zero(),
                intercept,
            }
        }
    }

    /// Wraps slopes fitted on the centered data, restoring the intercept.
    pub fn coefficients(&self, values: Array1<T>) -> CoefficientVector<T> {
        let intercept = self.intercept.then(|| self.y_mean - self.x_mean.dot(&values));
        CoefficientVector { values, intercept }
    }
}

/// Slopes plus an optional separately reported intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T> {
    pub values: Array1<T>,
    pub intercept: Option<T>,
}

impl<T: Real> CoefficientVector<T> {
    pub fn zeros(p: usize) -> Self {
        CoefficientVector { values: Array1::zeros(p), intercept: None }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the nonzero slopes, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v != T::zero()).map(|(j, _)| j).collect()
    }

    pub fn predict(&self, x: ArrayView2<'_, T>) -> Array1<T> {
        let mut out = x.dot(&self.values);
        if let Some(b0) = self.intercept {
            out.mapv_inplace(|v| v + b0);
        }
        out
    }

    pub fn residuals(&self, data: &Dataset<T>) -> Array1<T> {
        &data.y() - &self.predict(data.x())
    }

    pub fn sse(&self, data: &Dataset<T>) -> T {
        self.residuals(data).iter().map(|r| *r * *r).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyScheme {
    AdaptiveLasso,
    AdaptiveEnet,
    Lasso,
    Enet,
}

impl PenaltyScheme {
    pub fn is_adaptive(self) -> bool {
        matches!(self, PenaltyScheme::AdaptiveLasso | PenaltyScheme::AdaptiveEnet)
    }

    pub fn has_ridge(self) -> bool {
        matches!(self, PenaltyScheme::AdaptiveEnet | PenaltyScheme::Enet)
    }
}

/// Which estimator a path is computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec<T> {
    scheme: PenaltyScheme,
    gamma: T,
    lambda2: T,
}

impl<T: Real> PenaltySpec<T> {
    /// `lambda2` is forced to zero for the LASSO schemes.
    pub fn new(scheme: PenaltyScheme, gamma: T, lambda2: T) -> Result<Self> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("gamma must be ≥ 0, got {gamma}")));
        }
        if !(lambda2 >= T::zero()) || !lambda2.is_finite() {
            return Err(Error::InvalidInput(format!("lambda2 must be ≥ 0, got {lambda2}")));
        }
        let lambda2 = if scheme.has_ridge() { lambda2 } else { T::zero() };
        Ok(PenaltySpec { scheme, gamma, lambda2 })
    }

    /// Adaptive LASSO with γ = 1.
    pub fn adaptive_lasso() -> Self {
        PenaltySpec { scheme: PenaltyScheme::AdaptiveLasso, gamma: T::one(), lambda2: T::zero() }
    }

    pub fn adaptive_enet(lambda2: T) -> Result<Self> {
        Self::new(PenaltyScheme::AdaptiveEnet, T::one(), lambda2)
    }

    pub fn scheme(&self) -> PenaltyScheme {
        self.scheme
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn lambda2(&self) -> T {
        self.lambda2
    }

    pub fn with_lambda2(self, lambda2: T) -> Result<Self> {
        Self::new(self.scheme, self.gamma, lambda2)
    }
}

/// Least-squares fit (with intercept unless disabled on the dataset).
pub fn ols_fit<T: Real>(data: &Dataset<T>) -> Result<CoefficientVector<T>> {
    let c = data.centered();
    let beta = solve_normal_equations(c.x.view(), c.y.view(), T::zero(), data.effective_n(), true)?;
    Ok(c.coefficients(beta))
}

/// Minimizer of `‖y − Xβ‖² + λ₂‖β‖²` (intercept unpenalized).
pub fn ridge_fit<T: Real>(data: &Dataset<T>, lambda2: T) -> Result<CoefficientVector<T>> {
    check_lambda2(lambda2)?;
    if lambda2 == T::zero() {
        return ols_fit(data);
    }
    let c = data.centered();
    let beta = solve_normal_equations(c.x.view(), c.y.view(), lambda2, data.effective_n(), false)?;
    Ok(c.coefficients(beta))
}

fn check_lambda2<T: Real>(lambda2: T) -> Result<()> {
    if !(lambda2 >= T::zero()) || !lambda2.is_finite() {
        return Err(Error::InvalidInput(format!("lambda2 must be ≥ 0, got {lambda2}")));
    }
    Ok(())
}

/// Solves `(XᵀX + λ₂I)β = Xᵀy` on already-centered data.
pub(crate) fn solve_normal_equations<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView1<'_, T>,
    lambda2: T,
    effective_n: usize,
    check_condition: bool,
) -> Result<Array1<T>> {
    let p = x.ncols();
    if lambda2 == T::zero() && effective_n < p {
        return Err(Error::SingularDesign(format!(
            "need at least as many observations as predictors (effective n = {effective_n}, p = {p})"
        )));
    }
    let mut g = gram(x);
    if lambda2 == T::zero() && check_condition && p > 0 {
        let ev = symmetric_eigenvalues(g.view());
        let (lo, hi) = (ev[0], ev[p - 1]);
        if !(lo > T::zero()) || hi / lo > max_condition::<T>() {
            return Err(Error::SingularDesign(format!("condition number of XᵀX is {:e}", (hi / lo).to_f64_lossy())));
        }
    }
    for j in 0..p {
        g[[j, j]] += lambda2;
    }
    let l = cholesky(g.view(), T::epsilon() * T::lit(16.0))
        .ok_or_else(|| Error::SingularDesign("Cholesky factorization failed".into()))?;
    Ok(cholesky_solve(&l, x.t().dot(&y).view()))
}

/// `n·log(SSE/n) + df·log(n)`; SSE is floored at the smallest positive value.
pub fn bic_value<T: Real>(n: usize, sse: T, df: T) -> T {
    let nf = T::from_usize_lossy(n);
    nf * (sse.max(T::min_positive_value()) / nf).ln() + df * nf.ln()
}

/// Ridge fit at the grid value minimizing BIC with `df = tr(H(λ₂))`.
/// Ties go to the larger `λ₂`.
pub fn ridge_tune_bic<T: Real>(data: &Dataset<T>, grid: &[T]) -> Result<(CoefficientVector<T>, T)> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("ridge grid is empty".into()));
    }
    for &l in grid {
        check_lambda2(l)?;
    }
    let c = data.centered();
    let ev = symmetric_eigenvalues(gram(c.x.view()).view());
    let mut sorted: Vec<T> = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut best: Option<(T, CoefficientVector<T>, T)> = None;
    let mut last_err = None;
    for &l in &sorted {
        let fit = match ridge_fit(data, l) {
            Ok(f) => f,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let df: T = ev
            .iter()
            .map(|&d| {
                let d = d.max(T::zero());
                if l == T::zero() {
                    if d > T::zero() {
                        T::one()
                    } else {
                        T::zero()
                    }
                } else {
                    d / (d + l)
                }
            })
            .sum();
        let score = bic_value(data.n(), fit.sse(data), df);
        match &best {
            Some((s, _, _)) if score > *s => {}
            _ => best = Some((score, fit, l)),
        }
    }
    best.map(|(_, f, l)| (f, l))
        .ok_or_else(|| last_err.unwrap_or_else(|| Error::SingularDesign("no grid value succeeded".into())))
}

/// `ω_j = max(|β̃_j|, ε_w)^(−γ)`.
pub fn adaptive_weights<T: Real>(pilot: &CoefficientVector<T>, gamma: T) -> Array1<T> {
    let floor = T::lit(WEIGHT_FLOOR);
    pilot.values.mapv(|b| b.abs().max(floor).powf(-gamma))
}

/// Default pilot for the adaptive LASSO: OLS when `n > 1.5 p` and the design
/// is well conditioned, otherwise the BIC-tuned ridge over [`DEFAULT_RIDGE_GRID`].
pub fn default_pilot<T: Real>(data: &Dataset<T>) -> Result<CoefficientVector<T>> {
    if T::from_usize_lossy(data.effective_n()) > T::lit(1.5) * T::from_usize_lossy(data.p()) {
        if let Ok(fit) = ols_fit(data) {
            return Ok(fit);
        }
    }
    let grid: Vec<T> = DEFAULT_RIDGE_GRID.iter().map(|&v| T::lit(v)).collect();
    ridge_tune_bic(data, &grid).map(|(f, _)| f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn eye(n: usize) -> Array2<f64> {
        Array2::eye(n)
    }

    #[test]
    fn ols_identity_design() {
        let d = Dataset::new(eye(3), array![1.0, 2.0, 3.0]).unwrap().without_intercept();
        let b = ols_fit(&d).unwrap();
        assert!((&b.values - &array![1.0, 2.0, 3.0]).iter().all(|v| v.abs() < 1e-14));
        assert_eq!(b.intercept, None);
    }

    #[test]
    fn ols_needs_more_rows_than_columns() {
        let d = Dataset::new(eye(3), array![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(ols_fit(&d), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn ols_rejects_collinear_design() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0], [4.0, 8.0]];
        let d = Dataset::new(x, array![1.0, 0.0, 2.0, 1.0]).unwrap();
        assert!(matches!(ols_fit(&d), Err(Error::SingularDesign(_))));
        // ridge is still fine
        assert!(ridge_fit(&d, 0.1).is_ok());
    }

    #[test]
    fn ridge_closed_form_identity() {
        let d = Dataset::new(eye(2), array![2.0, 4.0]).unwrap().without_intercept();
        let b = ridge_fit(&d, 1.0).unwrap();
        assert!((b.values[0] - 1.0).abs() < 1e-14 && (b.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ridge_zero_equals_ols() {
        let x = array![[1.0, 0.3], [0.2, 1.1], [-0.7, 0.4], [1.5, -0.2], [0.1, 0.9]];
        let y = array![1.0, 2.0, 0.3, 1.1, -0.4];
        let d = Dataset::new(x, y).unwrap();
        assert_eq!(ridge_fit(&d, 0.0).unwrap(), ols_fit(&d).unwrap());
    }

    #[test]
    fn ridge_bic_singleton_grid() {
        let x = array![[1.0, 0.3], [0.2, 1.1], [-0.7, 0.4], [1.5, -0.2], [0.1, 0.9]];
        let y = array![1.0, 2.0, 0.3, 1.1, -0.4];
        let d = Dataset::new(x, y).unwrap();
        let (fit, l) = ridge_tune_bic(&d, &[0.7]).unwrap();
        assert_eq!(l, 0.7);
        assert_eq!(fit, ridge_fit(&d, 0.7).unwrap());
        assert!(ridge_tune_bic(&d, &[]).is_err());
    }

    #[test]
    fn weights_examples() {
        let pilot = CoefficientVector { values: array![2.0, 0.5], intercept: None };
        assert_eq!(adaptive_weights(&pilot, 0.0), array![1.0, 1.0]);
        assert_eq!(adaptive_weights(&pilot, 1.0), array![0.5, 2.0]);
        let zero = CoefficientVector { values: array![0.0f64, 1.0], intercept: None };
        let w = adaptive_weights(&zero, 1.0);
        assert!((w[0] - 1e8).abs() < 1e-6);
    }

    #[test]
    fn lasso_scheme_forces_zero_ridge() {
        let p = PenaltySpec::new(PenaltyScheme::AdaptiveLasso, 1.0, 3.0).unwrap();
        assert_eq!(p.lambda2(), 0.0);
        let p = PenaltySpec::new(PenaltyScheme::AdaptiveEnet, 1.0, 3.0).unwrap();
        assert_eq!(p.lambda2(), 3.0);
        assert!(PenaltySpec::new(PenaltyScheme::Lasso, -1.0, 0.0).is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(array![[1.0, f64::NAN], [0.0, 1.0]], array![1.0, 2.0]).is_err());
        assert!(Dataset::new(array![[1.0, 2.0]], array![1.0]).is_err());
        let d = Dataset::new(eye(2), array![1.0, 2.0]).unwrap();
        assert!(d.clone().with_truth(vec![2]).is_err());
        assert_eq!(d.with_truth(vec![1, 0, 1]).unwrap().truth(), Some(&[0, 1][..]));
    }
}
