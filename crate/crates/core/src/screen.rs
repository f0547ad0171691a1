//! Marginal-correlation screening for `p > n` problems.

use log::warn;
use ndarray::{ArrayView1, ArrayView2};

use crate::linalg::mean;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenResult<T> {
    /// Retained columns, by descending score (ties: lower index first).
    pub kept: Vec<usize>,
    /// `|corr(X_j, y)|` for every column; constant columns score 0.
    pub scores: Vec<T>,
}

/// `⌊n / ln n⌋`, at least 1.
pub fn default_screen_size(n: usize) -> usize {
    ((n as f64) / (n as f64).ln()).floor().max(1.0) as usize
}

/// Keeps the `d_n` columns with the largest absolute marginal correlation
/// with `y`.
pub fn sis_screen<T: Real>(x: ArrayView2<'_, T>, y: ArrayView1<'_, T>, d_n: usize) -> Result<ScreenResult<T>> {
    if d_n == 0 {
        return Err(Error::InvalidInput("screening size must be ≥ 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::InvalidInput("response length does not match rows".into()));
    }
    let ym = mean(y);
    let yc = y.mapv(|v| v - ym);
    let ynorm = yc.dot(&yc).sqrt();
    let mut constant = Vec::new();
    let scores: Vec<T> = x
        .columns()
        .into_iter()
        .enumerate()
        .map(|(j, col)| {
            let m = mean(col);
            let xc = col.mapv(|v| v - m);
            let xn = xc.dot(&xc).sqrt();
            if xn == T::zero() || ynorm == T::zero() {
                if xn == T::zero() {
                    constant.push(j);
                }
                return T::zero();
            }
            (xc.dot(&yc) / (xn * ynorm)).abs()
        })
        .collect();
    if !constant.is_empty() {
        warn!("{} constant column(s) scored 0 during screening", constant.len());
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order.truncate(d_n.min(scores.len()));
    Ok(ScreenResult { kept: order, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn keeps_everything_when_dn_is_p() {
        let x = array![[1.0, 0.0, 2.0], [2.0, 1.0, 0.5], [3.0, 0.0, 1.0], [4.0, 1.0, 0.0]];
        let y = array![1.0, 2.0, 3.0, 4.5];
        let r = sis_screen(x.view(), y.view(), 3).unwrap();
        assert_eq!(r.kept.len(), 3);
        let mut sorted = r.kept.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_eq!(r.kept[0], 0);
    }

    #[test]
    fn perfect_correlation_ranks_first_and_constant_scores_zero() {
        let x = Array2::from_shape_fn((8, 3), |(i, j)| match j {
            0 => 5.0,
            1 => (i as f64 * 1.3).sin(),
            _ => i as f64,
        });
        let y = x.column(2).to_owned();
        let r = sis_screen(x.view(), y.view(), 1).unwrap();
        assert_eq!(r.kept, vec![2]);
        assert_eq!(r.scores[0], 0.0);
        assert!((r.scores[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_size() {
        assert_eq!(default_screen_size(200), 37);
        assert_eq!(default_screen_size(100), 21);
    }
}
