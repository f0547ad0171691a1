//! Piecewise-linear regularization paths for the (adaptive) LASSO and
//! (adaptive) Elastic-Net, plus fixed-λ reference solvers.
//!
//! λ convention: the path parameter `λ` is the KKT threshold. For the
//! objective `‖y − Xβ‖² + λ₂‖β‖² + 2λ Σ ω_j|β_j|` an active coordinate
//! satisfies `X_jᵀ(y − Xβ) − λ₂β_j = λ ω_j sgn(β_j)` and an inactive one
//! `|X_jᵀ(y − Xβ)| ≤ λ ω_j`. Every routine in this module uses it.
//!
//! Weighted problems are equivalent to plain ones on `X_j/ω_j`; the homotopy
//! below carries the weights in the right-hand side instead of rescaling
//! columns, which gives the same knots.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::linalg::{cholesky, cholesky_solve, gram, max_abs};
use crate::model::{Centered, CoefficientVector, Dataset, PenaltyScheme, PenaltySpec};
use crate::{Error, Real, Result};

/// Pivot tolerance when growing the active set.
const DEGENERATE_TOL: f64 = 1e-10;
/// Events closer than this (relative to the entry λ) share a knot.
const KNOT_MERGE_TOL: f64 = 1e-13;

/// A knot of the path. `active_set` is the support of `coefficients`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPoint<T> {
    pub step: usize,
    pub lambda: T,
    pub active_set: Vec<usize>,
    pub coefficients: CoefficientVector<T>,
}

/// Knots ordered by strictly decreasing λ; `points[0]` is the empty model.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath<T> {
    pub points: Vec<TransitionPoint<T>>,
    pub penalty: PenaltySpec<T>,
    pub weights: Array1<T>,
    pub max_steps: usize,
    /// Factor applied to the naive Elastic-Net solution, `1 + λ₂/n`.
    pub rescale: T,
}

impl<T: Real> SolutionPath<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lambda2(&self) -> T {
        self.penalty.lambda2()
    }

    /// Slopes at knot `k` before the `(1 + λ₂/n)` rescale.
    pub fn naive_coefficients(&self, k: usize) -> Array1<T> {
        self.points[k].coefficients.values.mapv(|v| v / self.rescale)
    }

    pub fn p(&self) -> usize {
        self.weights.len()
    }
}

/// Default step cap `min(p, n − 1)`.
pub fn default_max_steps(n: usize, p: usize) -> usize {
    p.min(n.saturating_sub(1)).max(1)
}

/// Adaptive LASSO path by LARS with the lasso modification (variables may
/// leave the active set).
pub fn lars_lasso_path<T: Real>(
    data: &Dataset<T>,
    weights: ArrayView1<'_, T>,
    max_steps: usize,
) -> Result<SolutionPath<T>> {
    let penalty = PenaltySpec::new(PenaltyScheme::AdaptiveLasso, T::one(), T::zero())?;
    homotopy(data, penalty, weights, max_steps)
}

/// Adaptive Elastic-Net path (LARS-EN). Reported coefficients carry the
/// `(1 + λ₂/n)` rescale; with `λ₂ = 0` the result is identical to
/// [`lars_lasso_path`].
pub fn larsen_path<T: Real>(
    data: &Dataset<T>,
    lambda2: T,
    weights: ArrayView1<'_, T>,
    max_steps: usize,
) -> Result<SolutionPath<T>> {
    let scheme = if lambda2 == T::zero() { PenaltyScheme::AdaptiveLasso } else { PenaltyScheme::AdaptiveEnet };
    let penalty = PenaltySpec::new(scheme, T::one(), lambda2)?;
    homotopy(data, penalty, weights, max_steps)
}

/// Path for a fully specified penalty (used by the selection pipeline).
pub fn penalized_path<T: Real>(
    data: &Dataset<T>,
    penalty: PenaltySpec<T>,
    weights: ArrayView1<'_, T>,
    max_steps: usize,
) -> Result<SolutionPath<T>> {
    homotopy(data, penalty, weights, max_steps)
}

fn validate_weights<T: Real>(weights: ArrayView1<'_, T>, p: usize) -> Result<()> {
    if weights.len() != p {
        return Err(Error::InvalidInput(format!("expected {p} weights, got {}", weights.len())));
    }
    if let Some(j) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFiniteInput(format!("weight {j}")));
    }
    if let Some(j) = weights.iter().position(|w| !(*w > T::zero())) {
        return Err(Error::InvalidInput(format!("weight {j} is not positive")));
    }
    Ok(())
}

struct Knots<'a, T> {
    c: &'a Centered<T>,
    rescale: T,
    points: Vec<TransitionPoint<T>>,
}

impl<T: Real> Knots<'_, T> {
    fn push(&mut self, lambda: T, beta: &Array1<T>, merge: bool) {
        let values = beta.mapv(|v| v * self.rescale);
        let coefficients = self.c.coefficients(values);
        let active_set = coefficients.support();
        // the empty model at the entry knot is never merged away
        if merge && self.points.len() > 1 {
            if let Some(last) = self.points.last_mut() {
                last.lambda = lambda;
                last.active_set = active_set;
                last.coefficients = coefficients;
                return;
            }
        }
        let step = self.points.len();
        self.points.push(TransitionPoint { step, lambda, active_set, coefficients });
    }
}

enum Event {
    Enter(usize),
    Drop(usize),
    End,
}

fn homotopy<T: Real>(
    data: &Dataset<T>,
    penalty: PenaltySpec<T>,
    weights: ArrayView1<'_, T>,
    max_steps: usize,
) -> Result<SolutionPath<T>> {
    let p = data.p();
    validate_weights(weights, p)?;
    if max_steps == 0 {
        return Err(Error::InvalidInput("max_steps must be ≥ 1".into()));
    }
    let lambda2 = penalty.lambda2();
    let rescale = T::one() + lambda2 / T::from_usize_lossy(data.n());
    let c = data.centered();
    let g = gram(c.x.view());
    let w = weights.to_owned();

    let mut beta = Array1::<T>::zeros(p);
    let mut corr = c.x.t().dot(&c.y);
    let scaled: Vec<T> = (0..p).map(|j| corr[j].abs() / w[j]).collect();
    let (first, lambda0) = argmax_lowest(&scaled);
    let mut knots = Knots { c: &c, rescale, points: Vec::new() };
    knots.push(lambda0, &beta, false);
    if !(lambda0 > T::zero()) {
        return Ok(finish(knots, penalty, w, max_steps));
    }

    let mut lambda = lambda0;
    let merge_tol = T::lit(KNOT_MERGE_TOL) * lambda0;
    let mut active: Vec<usize> = vec![first];
    let mut signs: Vec<T> = vec![corr[first].signum()];
    let mut in_active = vec![false; p];
    in_active[first] = true;
    let mut excluded = vec![false; p];
    let mut just_dropped: Option<usize> = None;

    loop {
        // direction for the active coefficients per unit decrease of λ
        let m = active.len();
        let mut ga = Array2::<T>::zeros((m, m));
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate() {
                ga[[a, b]] = g[[i, j]];
            }
            ga[[a, a]] += lambda2;
        }
        let l = match cholesky(ga.view(), T::lit(DEGENERATE_TOL)) {
            Some(l) => l,
            None => {
                // newest variable makes the active Gram singular: refuse it
                let j = active.pop().expect("nonempty active set");
                signs.pop();
                in_active[j] = false;
                excluded[j] = true;
                if active.is_empty() {
                    break;
                }
                continue;
            }
        };
        let rhs: Array1<T> = active.iter().zip(&signs).map(|(&j, &s)| w[j] * s).collect();
        let dir = cholesky_solve(&l, rhs.view());
        let xa = c.x.select(Axis(1), &active);
        let u = xa.dot(&dir);
        let a = c.x.t().dot(&u);

        let tiny = merge_tol.max(T::min_positive_value());
        let mut best = lambda;
        let mut event = Event::End;
        for (k, &j) in active.iter().enumerate() {
            if dir[k] == T::zero() {
                continue;
            }
            let d = -beta[j] / dir[k];
            if d > tiny && d < best {
                best = d;
                event = Event::Drop(j);
            }
        }
        for j in 0..p {
            if in_active[j] || excluded[j] || just_dropped == Some(j) {
                continue;
            }
            let (cj, aj, wj) = (corr[j], a[j], w[j]);
            let mut dj = None::<T>;
            if cj.abs() >= lambda * wj {
                // already at its bound: an event closer than the merge
                // tolerance was passed over, so it enters right away
                dj = Some(T::zero());
            } else {
                for d in [(cj - lambda * wj) / (aj - wj), (cj + lambda * wj) / (aj + wj)] {
                    if d.is_finite() && d > T::zero() {
                        dj = Some(dj.map_or(d, |x: T| x.min(d)));
                    }
                }
            }
            if let Some(d) = dj {
                // strict `<` keeps the lowest index on exact ties
                if d < best && d < lambda * (T::one() - T::lit(1e-12)) {
                    best = d;
                    event = Event::Enter(j);
                }
            }
        }

        for (k, &j) in active.iter().enumerate() {
            beta[j] += best * dir[k];
        }
        let merged = best <= merge_tol;
        lambda = if matches!(event, Event::End) { T::zero() } else { (lambda - best).max(T::zero()) };
        if let Event::Drop(j) = event {
            beta[j] = T::zero();
        }
        knots.push(lambda, &beta, merged);

        corr = c.x.t().dot(&(&c.y - &c.x.dot(&beta)));
        just_dropped = None;
        match event {
            Event::End => break,
            Event::Drop(j) => {
                let k = active.iter().position(|&v| v == j).expect("dropped variable is active");
                active.remove(k);
                signs.remove(k);
                in_active[j] = false;
                just_dropped = Some(j);
            }
            Event::Enter(j) => {
                active.push(j);
                signs.push(corr[j].signum());
                in_active[j] = true;
            }
        }
        if knots.points.len() > max_steps || lambda <= T::zero() || active.is_empty() {
            break;
        }
    }
    Ok(finish(knots, penalty, w, max_steps))
}

fn finish<T: Real>(
    knots: Knots<'_, T>,
    penalty: PenaltySpec<T>,
    weights: Array1<T>,
    max_steps: usize,
) -> SolutionPath<T> {
    SolutionPath { points: knots.points, penalty, weights, max_steps, rescale: knots.rescale }
}

fn argmax_lowest<T: Real>(v: &[T]) -> (usize, T) {
    let mut best = (0, T::neg_infinity());
    for (j, &x) in v.iter().enumerate() {
        if x > best.1 {
            best = (j, x);
        }
    }
    best
}

/// Closed-form adaptive LASSO under an orthonormal design:
/// `β_j = (|X_jᵀy| − λω_j)₊ sgn(X_jᵀy)`. No centering is applied.
pub fn soft_threshold_orthogonal<T: Real>(
    data: &Dataset<T>,
    weights: ArrayView1<'_, T>,
    lambda: T,
) -> Result<CoefficientVector<T>> {
    validate_weights(weights, data.p())?;
    let x = data.x();
    let mut dev = gram(x);
    for j in 0..data.p() {
        dev[[j, j]] -= T::one();
    }
    let worst = dev.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if worst > T::lit(1e-8) {
        return Err(Error::NotOrthogonal(worst.to_f64_lossy()));
    }
    let z = x.t().dot(&data.y());
    let values = z.iter().zip(weights.iter()).map(|(&zj, &wj)| soft_threshold(zj, lambda * wj)).collect();
    Ok(CoefficientVector { values, intercept: None })
}

#[inline]
pub(crate) fn soft_threshold<T: Real>(z: T, t: T) -> T {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        T::zero()
    }
}

/// Scale used for KKT tolerances: `max(1, ‖Xᵀy‖∞)` on the centered data.
pub fn kkt_scale<T: Real>(data: &Dataset<T>) -> T {
    let c = data.centered();
    max_abs(c.x.t().dot(&c.y).view()).max(T::one())
}

/// Largest violation of the KKT conditions for naive (un-rescaled) slopes.
pub fn kkt_residual<T: Real>(
    data: &Dataset<T>,
    weights: ArrayView1<'_, T>,
    lambda1: T,
    lambda2: T,
    beta: ArrayView1<'_, T>,
) -> T {
    let c = data.centered();
    kkt_residual_centered(&c, weights, lambda1, lambda2, beta)
}

fn kkt_residual_centered<T: Real>(
    c: &Centered<T>,
    weights: ArrayView1<'_, T>,
    lambda1: T,
    lambda2: T,
    beta: ArrayView1<'_, T>,
) -> T {
    let r = &c.y - &c.x.dot(&beta);
    let grad = c.x.t().dot(&r);
    let mut worst = T::zero();
    for j in 0..beta.len() {
        let t = lambda1 * weights[j];
        let v = if beta[j] != T::zero() {
            (grad[j] - lambda2 * beta[j] - t * beta[j].signum()).abs()
        } else {
            (grad[j].abs() - t).max(T::zero())
        };
        worst = worst.max(v);
    }
    worst
}

pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Coordinate descent for `‖y − Xβ‖² + λ₂‖β‖² + 2λ₁ Σ ω_j|β_j|`; returns
/// once the KKT residual drops below `tol`.
pub fn cd_solve<T: Real>(
    data: &Dataset<T>,
    weights: ArrayView1<'_, T>,
    lambda1: T,
    lambda2: T,
    tol: T,
) -> Result<CoefficientVector<T>> {
    cd_solve_with(data, weights, lambda1, lambda2, tol, DEFAULT_MAX_SWEEPS)
}

pub fn cd_solve_with<T: Real>(
    data: &Dataset<T>,
    weights: ArrayView1<'_, T>,
    lambda1: T,
    lambda2: T,
    tol: T,
    max_sweeps: usize,
) -> Result<CoefficientVector<T>> {
    validate_weights(weights, data.p())?;
    if !(lambda1 >= T::zero()) || !(lambda2 >= T::zero()) || !(tol > T::zero()) {
        return Err(Error::InvalidInput("cd_solve needs λ₁, λ₂ ≥ 0 and tol > 0".into()));
    }
    let c = data.centered();
    let (n, p) = c.x.dim();
    let norms: Vec<T> = (0..p).map(|j| c.x.column(j).iter().map(|v| *v * *v).sum()).collect();
    let mut beta = Array1::<T>::zeros(p);
    let mut r = c.y.clone();
    let mut residual = T::infinity();
    for _sweep in 0..max_sweeps {
        for j in 0..p {
            if norms[j] == T::zero() {
                continue;
            }
            let col = c.x.column(j);
            let old = beta[j];
            let z = col.dot(&r) + norms[j] * old;
            let new = soft_threshold(z, lambda1 * weights[j]) / (norms[j] + lambda2);
            let delta = new - old;
            if delta != T::zero() {
                for i in 0..n {
                    r[i] -= delta * col[i];
                }
                beta[j] = new;
            }
        }
        residual = kkt_residual_centered(&c, weights, lambda1, lambda2, beta.view());
        if residual < tol {
            return Ok(c.coefficients(beta));
        }
    }
    Err(Error::NoConvergence { sweeps: max_sweeps, residual: residual.to_f64_lossy() })
}

/// Coefficients at an arbitrary `λ` by linear interpolation between knots.
/// Above the entry knot the model is empty; below the last knot of a
/// truncated path the last knot is returned.
pub fn coefficients_at<T: Real>(path: &SolutionPath<T>, lambda: T) -> CoefficientVector<T> {
    let pts = &path.points;
    if lambda >= pts[0].lambda {
        return pts[0].coefficients.clone();
    }
    for k in 0..pts.len() - 1 {
        let (hi, lo) = (&pts[k], &pts[k + 1]);
        if lambda == lo.lambda {
            return lo.coefficients.clone();
        }
        if lambda < hi.lambda && lambda > lo.lambda {
            let t = (hi.lambda - lambda) / (hi.lambda - lo.lambda);
            let s = T::one() - t;
            let values = &hi.coefficients.values * s + &lo.coefficients.values * t;
            let intercept = match (hi.coefficients.intercept, lo.coefficients.intercept) {
                (Some(a), Some(b)) => Some(a * s + b * t),
                _ => None,
            };
            return CoefficientVector { values, intercept };
        }
    }
    pts[pts.len() - 1].coefficients.clone()
}

/// Active set at the last knot whose model has exactly `k` variables.
pub fn last_model_of_size<T: Real>(path: &SolutionPath<T>, k: usize) -> Option<Vec<usize>> {
    path.points.iter().rev().find(|pt| pt.active_set.len() == k).map(|pt| pt.active_set.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> Dataset<f64> {
        let x = array![
            [1.0, 0.2, -0.3],
            [0.5, -1.0, 0.8],
            [-0.7, 0.4, 1.2],
            [1.3, 0.9, -0.5],
            [-0.2, -0.6, 0.1],
            [0.8, 1.4, 0.3]
        ];
        let y = array![1.5, -0.4, 0.2, 2.1, -0.9, 1.8];
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn entry_knot_is_empty_model() {
        let d = tiny();
        let path = lars_lasso_path(&d, Array1::ones(3).view(), 10).unwrap();
        assert!(path.points[0].active_set.is_empty());
        assert!(path.points[0].coefficients.values.iter().all(|v| *v == 0.0));
        let above = coefficients_at(&path, path.points[0].lambda * 2.0);
        assert!(above.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lambdas_strictly_decrease_and_kkt_holds() {
        let d = tiny();
        let w = array![1.0, 0.5, 2.0];
        let path = lars_lasso_path(&d, w.view(), 10).unwrap();
        for pair in path.points.windows(2) {
            assert!(pair[1].lambda < pair[0].lambda);
        }
        for (k, pt) in path.points.iter().enumerate() {
            let r = kkt_residual(&d, w.view(), pt.lambda, 0.0, path.naive_coefficients(k).view());
            assert!(r < 1e-9, "knot {k}: {r}");
        }
        assert_eq!(path.points.last().unwrap().lambda, 0.0);
    }

    #[test]
    fn knot_evaluation_is_exact() {
        let d = tiny();
        let path = lars_lasso_path(&d, Array1::ones(3).view(), 10).unwrap();
        for pt in &path.points {
            assert_eq!(coefficients_at(&path, pt.lambda), pt.coefficients);
        }
    }

    #[test]
    fn step_cap() {
        let d = tiny();
        let path = lars_lasso_path(&d, Array1::ones(3).view(), 1).unwrap();
        assert!(path.len() <= 2);
        assert!(lars_lasso_path(&d, Array1::ones(3).view(), 0).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        let d = tiny();
        assert!(lars_lasso_path(&d, array![1.0, 0.0, 1.0].view(), 5).is_err());
        assert!(lars_lasso_path(&d, array![1.0, f64::INFINITY, 1.0].view(), 5).is_err());
    }

    #[test]
    fn soft_threshold_small_case() {
        let d = Dataset::new(Array2::eye(2), array![3.0, 0.5]).unwrap().without_intercept();
        let b = soft_threshold_orthogonal(&d, array![1.0, 1.0].view(), 1.0).unwrap();
        assert_eq!(b.values, array![2.0, 0.0]);
        let b0 = soft_threshold_orthogonal(&d, array![1.0, 1.0].view(), 0.0).unwrap();
        assert_eq!(b0.values, array![3.0, 0.5]);
        let skew = Dataset::new(array![[1.0, 1.0], [0.0, 1.0]], array![1.0, 1.0]).unwrap();
        assert!(matches!(soft_threshold_orthogonal(&skew, array![1.0, 1.0].view(), 0.5), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn cd_full_shrinkage_and_unpenalized_limit() {
        let d = tiny();
        let w = Array1::ones(3);
        let b = cd_solve(&d, w.view(), 1e6, 0.0, 1e-10).unwrap();
        assert!(b.values.iter().all(|v| *v == 0.0));
        let b = cd_solve(&d, w.view(), 0.0, 0.0, 1e-12).unwrap();
        let ols = crate::model::ols_fit(&d).unwrap();
        assert!((&b.values - &ols.values).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn cd_reports_non_convergence() {
        let d = tiny();
        let r = cd_solve_with(&d, Array1::ones(3).view(), 0.0, 0.0, 1e-300, 3);
        assert!(matches!(r, Err(Error::NoConvergence { sweeps: 3, .. })));
    }

    fn fake_path(sizes: &[&[usize]]) -> SolutionPath<f64> {
        let points = sizes
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut v = Array1::zeros(4);
                for &j in *s {
                    v[j] = 1.0;
                }
                TransitionPoint {
                    step: k,
                    lambda: 10.0 - k as f64,
                    active_set: s.to_vec(),
                    coefficients: CoefficientVector { values: v, intercept: None },
                }
            })
            .collect();
        SolutionPath {
            points,
            penalty: PenaltySpec::adaptive_lasso(),
            weights: Array1::ones(4),
            max_steps: 10,
            rescale: 1.0,
        }
    }

    #[test]
    fn last_model_of_size_takes_latest() {
        let path = fake_path(&[&[], &[0], &[0, 2], &[0], &[0, 3], &[0, 1, 3]]);
        assert_eq!(last_model_of_size(&path, 1), Some(vec![0]));
        assert_eq!(last_model_of_size(&path, 2), Some(vec![0, 3]));
        assert_eq!(last_model_of_size(&path, 4), None);
        let mono = fake_path(&[&[], &[1], &[1, 2], &[0, 1, 2]]);
        assert_eq!(last_model_of_size(&mono, 2), Some(vec![1, 2]));
    }
}
