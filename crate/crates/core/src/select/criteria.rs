use std::str::FromStr;

use ndarray::Axis;

use super::cv::split;
use super::{fold_assignment, sigma2_estimate, CvConfig, Method, SelectionResult};
use crate::model::{bic_value, Dataset};
use crate::path::{coefficients_at, penalized_path, SolutionPath};
use crate::{Error, Real, Result};

/// Default `ξ` of the extended BIC.
pub const DEFAULT_EBIC_XI: f64 = 0.5;

/// Classical criteria evaluated on the knots of a path.
///
/// With `k` the knot's model size and SSE from the (penalized) knot fit:
/// - BIC  = `n log(SSE/n) + k log n`
/// - EBIC = BIC + `2ξ log C(p, k)`
/// - GIC  = `n log(SSE/n) + log(log n)·log(p)·k`
/// - Cp   = `SSE/σ̂² − n + 2k`
/// - cv-min / cv-1se: K-fold CV error along the path, minimum or the
///   largest λ within one standard error of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Bic,
    Ebic,
    Gic,
    Cp,
    CvMin,
    Cv1se,
}

impl Criterion {
    pub fn method(self) -> Method {
        match self {
            Criterion::Bic => Method::Bic,
            Criterion::Ebic => Method::Ebic,
            Criterion::Gic => Method::Gic,
            Criterion::Cp => Method::Cp,
            Criterion::CvMin => Method::CvMin,
            Criterion::Cv1se => Method::Cv1se,
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Method>().ok().and_then(Method::criterion).ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

pub(crate) fn ln_choose(p: usize, k: usize) -> f64 {
    let k = k.min(p - k.min(p));
    (0..k).map(|i| ((p - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Picks the knot minimizing `criterion`; ties go to the earlier knot.
pub fn criterion_select<T: Real>(
    data: &Dataset<T>,
    path: &SolutionPath<T>,
    criterion: Criterion,
    cfg: &CvConfig<T>,
) -> Result<SelectionResult<T>> {
    if path.is_empty() {
        return Err(Error::InvalidInput("path has no knots".into()));
    }
    let n = data.n();
    let nf = T::from_usize_lossy(n);
    let p = data.p();
    let sses: Vec<T> = path.points.iter().map(|pt| pt.coefficients.sse(data)).collect();
    let sizes: Vec<usize> = path.points.iter().map(|pt| pt.active_set.len()).collect();
    let (scores, knot) = match criterion {
        Criterion::Bic | Criterion::Ebic | Criterion::Gic | Criterion::Cp => {
            let sigma2 = if criterion == Criterion::Cp {
                match cfg.sigma2 {
                    Some(s) => s,
                    None => sigma2_estimate(data)?,
                }
            } else {
                T::one()
            };
            let scores: Vec<T> = sses
                .iter()
                .zip(&sizes)
                .map(|(&sse, &k)| {
                    let kf = T::from_usize_lossy(k);
                    match criterion {
                        Criterion::Bic => bic_value(n, sse, kf),
                        Criterion::Ebic => bic_value(n, sse, kf) + T::lit(2.0 * DEFAULT_EBIC_XI * ln_choose(p, k)),
                        Criterion::Gic => {
                            bic_value(n, sse, T::zero()) + nf.ln().ln() * T::from_usize_lossy(p).ln() * kf
                        }
                        _ => sse / sigma2 - nf + T::lit(2.0) * kf,
                    }
                })
                .collect();
            let k = argmin_first(&scores);
            (scores, k)
        }
        Criterion::CvMin | Criterion::Cv1se => {
            cfg.validate(n)?;
            let (mean, se) = path_cv(data, path, cfg)?;
            let kmin = argmin_first(&mean);
            let k = if criterion == Criterion::CvMin {
                kmin
            } else {
                let bound = mean[kmin] + se[kmin];
                (0..=kmin).find(|&k| mean[k] <= bound && sizes[k] <= sizes[kmin]).unwrap_or(kmin)
            };
            (mean, k)
        }
    };
    let pt = &path.points[knot];
    Ok(SelectionResult {
        dimension: pt.active_set.len(),
        model: pt.active_set.clone(),
        method: criterion.method(),
        diagnostics: Vec::new(),
        knot_scores: scores,
        knot: Some(knot),
    })
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

/// Mean and standard error of the fold MSEs at each knot. Fold paths use
/// the full-data weights and the knot λ (and λ₂) scaled by `n_train/n`.
fn path_cv<T: Real>(data: &Dataset<T>, path: &SolutionPath<T>, cfg: &CvConfig<T>) -> Result<(Vec<T>, Vec<T>)> {
    let n = data.n();
    let k = cfg.folds;
    let fold = fold_assignment(n, k, cfg.seed);
    let m = path.len();
    let mut fold_mse = vec![vec![T::zero(); k]; m];
    let mut total = vec![T::zero(); m];
    for f in 0..k {
        let (train, test) = split(&fold, f);
        let td = data.select_rows(&train);
        let ratio = T::from_usize_lossy(train.len()) / T::from_usize_lossy(n);
        let penalty = path.penalty.with_lambda2(path.lambda2() * ratio)?;
        let fp = penalized_path(&td, penalty, path.weights.view(), path.max_steps)?;
        let tx = data.x().select(Axis(0), &test);
        let ty = data.y().select(Axis(0), &test);
        for (kk, pt) in path.points.iter().enumerate() {
            let coef = coefficients_at(&fp, pt.lambda * ratio);
            let pred = coef.predict(tx.view());
            let sse: T = ty.iter().zip(pred.iter()).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            fold_mse[kk][f] = sse / T::from_usize_lossy(test.len());
            total[kk] += sse;
        }
    }
    let kf = T::from_usize_lossy(k);
    let mean: Vec<T> = total.iter().map(|s| *s / T::from_usize_lossy(n)).collect();
    let se = fold_mse
        .iter()
        .map(|v| {
            let mu = v.iter().copied().sum::<T>() / kf;
            let var = v.iter().map(|x| (*x - mu) * (*x - mu)).sum::<T>() / (kf - T::one());
            (var / kf).sqrt()
        })
        .collect();
    Ok((mean, se))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_choose_values() {
        assert!((ln_choose(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_choose(5, 0), 0.0);
        assert!((ln_choose(5, 5)).abs() < 1e-12);
    }

    #[test]
    fn parse_criteria() {
        assert_eq!("BIC".parse::<Criterion>().unwrap(), Criterion::Bic);
        assert_eq!("cv-1se".parse::<Criterion>().unwrap(), Criterion::Cv1se);
        assert!(matches!("aic".parse::<Criterion>(), Err(Error::UnknownCriterion(_))));
        assert!("wmf".parse::<Criterion>().is_err());
    }
}
