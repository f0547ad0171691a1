use log::warn;

use super::{
    mcv_error, mcv_error_at_dimension, mf_table, CvConfig, DimensionDiagnostics, DimensionTable, Method, MfSettings,
    RefitMode, SelectionResult,
};
use crate::linalg::{gram, symmetric_eigenvalues};
use crate::model::{ols_fit, ridge_tune_bic, Dataset, DEFAULT_RIDGE_GRID};
use crate::resample::derive_seed;
use crate::{Error, Real, Result};

/// Floor applied to a zero noise-variance estimate.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Replicate index reserved for the CV fold stream of a selection run.
const CV_STREAM: u64 = u64::MAX;

/// Noise variance: full-model OLS `SSE/(n − p − 1)` when that fit is
/// available, otherwise the BIC-tuned ridge with effective degrees of
/// freedom. Intercept-free datasets drop the `− 1`.
pub fn sigma2_estimate<T: Real>(data: &Dataset<T>) -> Result<T> {
    if data.n() < 3 {
        return Err(Error::InvalidInput("noise variance needs n ≥ 3".into()));
    }
    let icpt = usize::from(data.has_intercept());
    let floor = T::lit(SIGMA2_FLOOR);
    if data.n() > data.p() + 1 + icpt {
        if let Ok(fit) = ols_fit(data) {
            let dof = T::from_usize_lossy(data.n() - data.p() - icpt);
            return Ok((fit.sse(data) / dof).max(floor));
        }
    }
    let grid: Vec<T> = DEFAULT_RIDGE_GRID.iter().map(|&v| T::lit(v)).collect();
    let (fit, l) = ridge_tune_bic(data, &grid)?;
    let c = data.centered();
    let ev = symmetric_eigenvalues(gram(c.x.view()).view());
    let df: T = ev.iter().map(|&d| d.max(T::zero()) / (d.max(T::zero()) + l)).sum::<T>() + T::from_usize_lossy(icpt);
    let dof = T::from_usize_lossy(data.n()) - df;
    if !(dof > T::zero()) {
        return Err(Error::SingularDesign("no residual degrees of freedom left".into()));
    }
    Ok((fit.sse(data) / dof).max(floor))
}

/// `softmax(−errors / temperature)` with max-subtraction. Non-finite errors
/// get weight zero.
pub fn softmax_weights<T: Real>(errors: &[T], temperature: T) -> Result<Vec<T>> {
    if !(temperature > T::zero()) || !temperature.is_finite() {
        return Err(Error::NonPositiveSigma(temperature.to_f64_lossy()));
    }
    let logits: Vec<T> =
        errors.iter().map(|&e| if e.is_finite() { -e / temperature } else { T::neg_infinity() }).collect();
    let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
    if top == T::neg_infinity() {
        return Ok(vec![T::zero(); errors.len()]);
    }
    let ex: Vec<T> = logits.iter().map(|&l| (l - top).exp()).collect();
    let total: T = ex.iter().copied().sum();
    Ok(ex.into_iter().map(|v| v / total).collect())
}

/// Posterior weight of each dimension,
/// `P̂(j | y) ∝ exp(−T̂_n(j) / (c σ̂²))`, normalized over the entries given.
pub fn dimension_weights<T: Real>(errors: &[T], cfg: &CvConfig<T>, data: &Dataset<T>) -> Result<Vec<T>> {
    if let Some(i) = errors.iter().position(|e| e.is_nan()) {
        return Err(Error::NonFiniteInput(format!("T̂ entry {i}")));
    }
    let sigma2 = match cfg.sigma2 {
        Some(s) => s,
        None => sigma2_estimate(data)?,
    };
    if !(sigma2 > T::zero()) {
        return Err(Error::NonPositiveSigma(sigma2.to_f64_lossy()));
    }
    softmax_weights(errors, cfg.c * sigma2)
}

/// Weighted maximum-frequency selection: `r* = argmax_{1≤j≤p−1} P̂(j|y)·MF_j`,
/// ties to the higher dimension.
pub fn wmf_select<T: Real>(
    data: &Dataset<T>,
    settings: &MfSettings<T>,
    cfg: &CvConfig<T>,
    master_seed: u64,
) -> Result<SelectionResult<T>> {
    cfg.validate(data.n())?;
    let table = mf_table(data, settings, master_seed)?;
    wmf_select_from_table(data, &table, settings, cfg, master_seed)
}

/// [`wmf_select`] on an already tallied table (the one built from
/// `master_seed`).
pub fn wmf_select_from_table<T: Real>(
    data: &Dataset<T>,
    table: &DimensionTable,
    settings: &MfSettings<T>,
    cfg: &CvConfig<T>,
    master_seed: u64,
) -> Result<SelectionResult<T>> {
    cfg.validate(data.n())?;
    let cv_seed = derive_seed(master_seed, CV_STREAM, 0);
    let p = data.p();
    let dims: Vec<usize> = (1..p).collect();
    let errors: Vec<T> = dims
        .iter()
        .map(|&j| {
            let Some(model) = table.model(j) else {
                return T::infinity();
            };
            let e = match cfg.refit {
                RefitMode::Ols => mcv_error(data, model, cfg.folds, cv_seed),
                RefitMode::Penalized => mcv_error_at_dimension(data, settings, j, cfg.folds, cv_seed),
            };
            e.unwrap_or_else(|err| {
                warn!("T̂ at dimension {j} unavailable: {err}");
                T::infinity()
            })
        })
        .collect();
    let weights = dimension_weights(&errors, cfg, data)?;
    let b = T::from_usize_lossy(table.replicates());
    let mut best: Option<(usize, T)> = None;
    let mut diagnostics = Vec::with_capacity(dims.len());
    for (i, &j) in dims.iter().enumerate() {
        let mf = T::from_usize_lossy(table.mf(j));
        let wmf = weights[i] * mf;
        if mf > T::zero() && wmf > T::zero() && best.is_none_or(|(_, w)| wmf >= w) {
            best = Some((j, wmf));
        }
        diagnostics.push(DimensionDiagnostics {
            dimension: j,
            mf_frequency: mf / b,
            model: table.model(j).map(<[usize]>::to_vec),
            mcv: Some(errors[i]),
            weight: Some(weights[i]),
            wmf: Some(wmf),
        });
    }
    let (dimension, _) = best.ok_or(Error::EmptyTable)?;
    Ok(SelectionResult {
        dimension,
        model: table.model(dimension).expect("visited dimension").to_vec(),
        method: Method::Wmf,
        diagnostics,
        knot_scores: Vec::new(),
        knot: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    #[test]
    fn softmax_known_values() {
        let w = softmax_weights(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let z = (-1f64).exp() + (-2f64).exp() + (-3f64).exp();
        let expect = [(-1f64).exp() / z, (-2f64).exp() / z, (-3f64).exp() / z];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w[0] - 0.6652).abs() < 5e-5 && (w[1] - 0.2447).abs() < 5e-5 && (w[2] - 0.0900).abs() < 5e-5);
    }

    #[test]
    fn softmax_uniform_and_shift() {
        let w = softmax_weights(&[4.0f64; 5], 2.0).unwrap();
        assert!(w.iter().all(|v| (v - 0.2).abs() < 1e-15));
        let a = softmax_weights(&[0.3f64, 1.7, 0.9], 1.3).unwrap();
        let b = softmax_weights(&[1000.3f64, 1001.7, 1000.9], 1.3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(matches!(softmax_weights(&[1.0], 0.0), Err(Error::NonPositiveSigma(_))));
    }

    #[test]
    fn sigma_override_and_floor() {
        let x = Array2::from_shape_fn((30, 3), |(i, j)| ((i * (j + 2)) as f64 * 0.71).sin());
        let y: Array1<f64> = x.column(0).mapv(|v| 3.0 * v) + 1.0;
        let d = Dataset::new(x, y).unwrap();
        assert_eq!(sigma2_estimate(&d).unwrap(), SIGMA2_FLOOR);
        let cfg = CvConfig { sigma2: Some(4.0), ..CvConfig::default() };
        let w = dimension_weights(&[4.0, 8.0], &cfg, &d).unwrap();
        assert!((w[0] / w[1] - 1f64.exp()).abs() < 1e-12);
    }
}
