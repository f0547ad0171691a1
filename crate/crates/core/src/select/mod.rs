//! Tuning-parameter selection on transition points: the bootstrap
//! maximum-frequency table, the prediction-weighted selector and the
//! classical information criteria it is compared against.

mod criteria;
mod cv;
mod table;
mod wmf;

pub(crate) use criteria::ln_choose;
pub use criteria::{criterion_select, Criterion, DEFAULT_EBIC_XI};
pub use cv::{fold_assignment, mcv_error, mcv_error_at_dimension};
pub use table::{mf_select, mf_table, DimensionTable};
pub use wmf::{dimension_weights, sigma2_estimate, softmax_weights, wmf_select, wmf_select_from_table, SIGMA2_FLOOR};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::model::{adaptive_weights, bic_value, default_pilot, Dataset, PenaltyScheme, PenaltySpec};
use crate::path::{default_max_steps, penalized_path, SolutionPath};
use crate::resample::BootstrapScheme;
use crate::{Error, Real, Result};

/// How `T̂_n(j)` refits the dimension-`j` model inside each CV fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefitMode {
    /// OLS on the columns of `M_j`.
    #[default]
    Ols,
    /// The penalized path refit on the training fold, read off at its last
    /// knot of size `j`.
    Penalized,
}

/// Multi-fold CV settings and the temperature of the dimension weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig<T> {
    pub folds: usize,
    /// Weight temperature `c`, in `[1, 2]`.
    pub c: T,
    /// Known noise variance; estimated from the data when `None`.
    pub sigma2: Option<T>,
    pub refit: RefitMode,
    /// Seed for fold assignment in [`criterion_select`].
    pub seed: u64,
}

impl<T: Real> Default for CvConfig<T> {
    fn default() -> Self {
        CvConfig { folds: 10, c: T::one(), sigma2: None, refit: RefitMode::Ols, seed: 0 }
    }
}

impl<T: Real> CvConfig<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 || self.folds > n {
            return Err(Error::InvalidInput(format!("need 2 ≤ K ≤ n, got K = {} with n = {n}", self.folds)));
        }
        if !(self.c >= T::one() && self.c <= T::lit(2.0)) {
            return Err(Error::InvalidInput(format!("c must lie in [1, 2], got {}", self.c)));
        }
        Ok(())
    }
}

/// Everything that determines one bootstrap path fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MfSettings<T> {
    pub penalty: PenaltySpec<T>,
    pub bootstrap: BootstrapScheme<T>,
    pub replicates: usize,
    /// Step cap for every path; `min(p, n − 1)` when `None`.
    pub max_steps: Option<usize>,
}

impl<T: Real> MfSettings<T> {
    /// Adaptive LASSO with paired bootstrap and `B = 100`.
    pub fn adaptive_lasso() -> Self {
        MfSettings {
            penalty: PenaltySpec::adaptive_lasso(),
            bootstrap: BootstrapScheme::paired(),
            replicates: 100,
            max_steps: None,
        }
    }

    /// Adaptive Elastic-Net with residual bootstrap and `B = 100`.
    pub fn adaptive_enet(lambda2: T) -> Result<Self> {
        Ok(MfSettings {
            penalty: PenaltySpec::adaptive_enet(lambda2)?,
            bootstrap: BootstrapScheme::residual(),
            replicates: 100,
            max_steps: None,
        })
    }

    pub fn with_replicates(mut self, b: usize) -> Self {
        self.replicates = b;
        self
    }

    pub fn steps_for(&self, data: &Dataset<T>) -> usize {
        self.max_steps.unwrap_or_else(|| default_max_steps(data.n(), data.p()))
    }
}

/// Penalty weights `ω` for `data` under `penalty`.
///
/// The adaptive LASSO uses [`default_pilot`]; the adaptive Elastic-Net uses
/// the Elastic-Net estimate at the BIC-best knot of its path with the same
/// `λ₂`; the plain schemes use unit weights.
pub fn penalty_weights<T: Real>(data: &Dataset<T>, penalty: &PenaltySpec<T>) -> Result<Array1<T>> {
    match penalty.scheme() {
        PenaltyScheme::Lasso | PenaltyScheme::Enet => Ok(Array1::ones(data.p())),
        PenaltyScheme::AdaptiveLasso => Ok(adaptive_weights(&default_pilot(data)?, penalty.gamma())),
        PenaltyScheme::AdaptiveEnet => {
            let (pilot, _) = enet_bic_pilot(data, penalty.lambda2())?;
            Ok(adaptive_weights(&pilot, penalty.gamma()))
        }
    }
}

/// Elastic-Net path (unit weights) at `λ₂`; returns the rescaled
/// coefficients of the BIC-minimizing knot and that BIC value.
pub fn enet_bic_pilot<T: Real>(data: &Dataset<T>, lambda2: T) -> Result<(crate::model::CoefficientVector<T>, T)> {
    let penalty = PenaltySpec::new(PenaltyScheme::Enet, T::one(), lambda2)?;
    let ones = Array1::ones(data.p());
    let path = penalized_path(data, penalty, ones.view(), default_max_steps(data.n(), data.p()))?;
    let (k, score) = path_bic_argmin(data, &path);
    Ok((path.points[k].coefficients.clone(), score))
}

fn path_bic_argmin<T: Real>(data: &Dataset<T>, path: &SolutionPath<T>) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (k, pt) in path.points.iter().enumerate() {
        let s = bic_value(data.n(), pt.coefficients.sse(data), T::from_usize_lossy(pt.active_set.len()));
        if s < best.1 {
            best = (k, s);
        }
    }
    best
}

/// Two-dimensional BIC over `(λ₂, knot)`; returns the chosen `λ₂`.
/// Ties go to the larger `λ₂`.
pub fn tune_enet_lambda2<T: Real>(data: &Dataset<T>, grid: &[T]) -> Result<T> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("λ₂ grid is empty".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut best: Option<(T, T)> = None;
    for &l in &sorted {
        let (_, score) = enet_bic_pilot(data, l)?;
        match best {
            Some((s, _)) if score > s => {}
            _ => best = Some((score, l)),
        }
    }
    Ok(best.expect("nonempty grid").1)
}

/// Per-dimension quantities behind a selection. Fields are `None` where the
/// method does not compute them.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionDiagnostics<T> {
    pub dimension: usize,
    /// `MF_j / B`.
    pub mf_frequency: T,
    pub model: Option<Vec<usize>>,
    /// `T̂_n(j)`.
    pub mcv: Option<T>,
    /// `P̂(j | y)`.
    pub weight: Option<T>,
    /// `WMF_j = P̂(j | y)·MF_j`.
    pub wmf: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Wmf,
    Mf,
    Bic,
    Ebic,
    Gic,
    Cp,
    CvMin,
    #[serde(rename = "cv-1se")]
    Cv1se,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Wmf => "wmf",
            Method::Mf => "mf",
            Method::Bic => "bic",
            Method::Ebic => "ebic",
            Method::Gic => "gic",
            Method::Cp => "cp",
            Method::CvMin => "cv-min",
            Method::Cv1se => "cv-1se",
        }
    }

    pub fn criterion(self) -> Option<Criterion> {
        match self {
            Method::Bic => Some(Criterion::Bic),
            Method::Ebic => Some(Criterion::Ebic),
            Method::Gic => Some(Criterion::Gic),
            Method::Cp => Some(Criterion::Cp),
            Method::CvMin => Some(Criterion::CvMin),
            Method::Cv1se => Some(Criterion::Cv1se),
            Method::Wmf | Method::Mf => None,
        }
    }

    pub const ALL: [Method; 8] =
        [Method::Wmf, Method::Mf, Method::Bic, Method::Ebic, Method::Gic, Method::Cp, Method::CvMin, Method::Cv1se];
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownCriterion(s.to_string()))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Chosen dimension and model (zero-based column indices).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub dimension: usize,
    pub model: Vec<usize>,
    pub method: Method,
    /// For the bootstrap methods, one entry per dimension `1..p−1`.
    pub diagnostics: Vec<DimensionDiagnostics<T>>,
    /// For the criteria, the score at every knot of the path.
    pub knot_scores: Vec<T>,
    /// Knot of the path chosen by a criterion.
    pub knot: Option<usize>,
}

/// Runs `method` on `data`. Bootstrap methods draw from `master_seed`; the
/// criteria score the knots of the full-data path (also returned).
pub fn run_method<T: Real>(
    data: &Dataset<T>,
    method: Method,
    settings: &MfSettings<T>,
    cfg: &CvConfig<T>,
    master_seed: u64,
) -> Result<(SelectionResult<T>, Option<SolutionPath<T>>)> {
    match method {
        Method::Wmf => Ok((wmf_select(data, settings, cfg, master_seed)?, None)),
        Method::Mf => Ok((mf_select(&mf_table(data, settings, master_seed)?)?, None)),
        other => {
            let criterion = other.criterion().expect("criterion method");
            let path = full_path(data, settings)?;
            Ok((criterion_select(data, &path, criterion, cfg)?, Some(path)))
        }
    }
}

/// The penalized path on the full data with the settings' penalty and step cap.
pub fn full_path<T: Real>(data: &Dataset<T>, settings: &MfSettings<T>) -> Result<SolutionPath<T>> {
    let weights = penalty_weights(data, &settings.penalty)?;
    penalized_path(data, settings.penalty, weights.view(), settings.steps_for(data))
}
