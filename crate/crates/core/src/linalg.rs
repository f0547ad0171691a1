//! Small dense kernels over `ndarray` used by the estimators.
//!
//! Problem sizes here are modest (p up to a few hundred), so plain
//! Cholesky and cyclic Jacobi are adequate and keep the crate free of
//! LAPACK bindings.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::Real;

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot drops below `rel_tol` times the largest
/// diagonal entry.
pub fn cholesky<T: Real>(a: ArrayView2<'_, T>, rel_tol: T) -> Option<Array2<T>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let scale = a.diag().iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let floor = rel_tol * scale.max(T::min_positive_value());
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > floor) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower factor.
pub fn cholesky_solve<T: Real>(l: &Array2<T>, b: ArrayView1<'_, T>) -> Array1<T> {
    let n = l.nrows();
    let mut z = b.to_owned();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[[k, i]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: ArrayView2<'_, T>) -> Array1<T> {
    let n = a.nrows();
    let mut m = a.to_owned();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        let total: T = m.iter().map(|v| *v * *v).sum();
        if off <= eps * eps * total.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == T::zero() {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = m.diag().to_vec();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Array1::from(ev)
}

/// `XᵀX`.
pub fn gram<T: Real>(x: ArrayView2<'_, T>) -> Array2<T> {
    x.t().dot(&x)
}

/// Column means.
pub fn column_means<T: Real>(x: ArrayView2<'_, T>) -> Array1<T> {
    let n = T::from_usize_lossy(x.nrows());
    x.sum_axis(Axis(0)) / n
}

pub fn mean<T: Real>(v: ArrayView1<'_, T>) -> T {
    if v.is_empty() {
        return T::zero();
    }
    v.sum() / T::from_usize_lossy(v.len())
}

/// Copies the listed columns.
pub fn select_columns<T: Real>(x: ArrayView2<'_, T>, cols: &[usize]) -> Array2<T> {
    x.select(Axis(1), cols)
}

pub fn max_abs<T: Real>(v: ArrayView1<'_, T>) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}
