//! Data-generating processes for the simulation scenarios, replication
//! orchestration and the four selection metrics.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use log::warn;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::glm::{
    glm_criterion_select, glm_default_path, glm_mf_table, glm_wmf_select_from_table, sigmoid, GlmDataset, GlmSettings,
};
use crate::linalg::cholesky;
use crate::model::{Dataset, PenaltyScheme, PenaltySpec, DEFAULT_RIDGE_GRID};
use crate::resample::{derive_seed, rng_from_seed, BootstrapKind, BootstrapScheme};
use crate::select::{mf_select, run_method, tune_enet_lambda2, CvConfig, Method, MfSettings, SelectionResult};
use crate::{Error, Real, Result};

/// Sample size at which every growth schedule starts.
pub const ANCHOR_N: usize = 100;
/// Default sample sizes of a campaign.
pub const DEFAULT_N_LIST: [usize; 3] = [100, 300, 500];
/// Noise scale of the near-duplicate block columns, `x = f + 0.05·e`.
pub const BLOCK_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimRule {
    Fixed(usize),
    /// `⌊√n⌋`.
    Sqrt,
    /// `n^{3/4}` rounded to nearest.
    Pow34,
}

impl DimRule {
    pub fn p(self, n: usize) -> usize {
        match self {
            DimRule::Fixed(p) => p,
            DimRule::Sqrt => (n as f64).sqrt().floor() as usize,
            DimRule::Pow34 => (n as f64).powf(0.75).round() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovRule {
    /// `Σ(i, j) = ρ^{|i−j|}`.
    Ar(f64),
    /// Each block of true covariates shares a factor; noise covariates are
    /// i.i.d. `N(0, 1)`.
    BlockNearOne,
}

/// Coefficient schedule: `base` at `n = 100`, then `block` new entries equal
/// to `new_value` for every `step_n` increment in `n`. True covariates are
/// contiguous from the first column in the order they are added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRule {
    pub base: Vec<f64>,
    pub step_n: usize,
    pub block: usize,
    pub new_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Response {
    Gaussian,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// `"1"`..`"6"` or `"glm-example"`.
    pub id: String,
    pub p_rule: DimRule,
    pub beta_rule: BetaRule,
    pub sigma: f64,
    pub cov_rule: CovRule,
    pub response: Response,
    /// Block size used to group the true covariates under [`CovRule::BlockNearOne`].
    pub group: usize,
}

const EXAMPLE_BETA: [f64; 5] = [3.0, 1.5, 0.0, 0.0, 2.0];

impl ScenarioSpec {
    /// Scenarios 1–6 of the simulation study.
    pub fn scenario(id: u8) -> Result<Self> {
        let never = BetaRule { base: EXAMPLE_BETA.to_vec(), step_n: usize::MAX, block: 0, new_value: 0.0 };
        let per40 = |v: f64| BetaRule { base: EXAMPLE_BETA.to_vec(), step_n: 40, block: 1, new_value: v };
        let per200 = |base: Vec<f64>, v: f64| BetaRule { base, step_n: 200, block: 3, new_value: v };
        let spec = |p_rule, beta_rule, sigma, cov_rule| ScenarioSpec {
            id: id.to_string(),
            p_rule,
            beta_rule,
            sigma,
            cov_rule,
            response: Response::Gaussian,
            group: 3,
        };
        Ok(match id {
            1 => spec(DimRule::Fixed(10), never, 3.0, CovRule::Ar(0.3)),
            2 => spec(DimRule::Sqrt, per40(1.0), 3.0, CovRule::Ar(0.3)),
            3 => spec(DimRule::Pow34, per40(2.0), 3.0, CovRule::Ar(0.3)),
            4 => spec(DimRule::Sqrt, per200(vec![2.0; 3], 1.0), 3.0, CovRule::Ar(0.5)),
            5 => spec(DimRule::Pow34, per200(vec![2.0; 6], 2.0), 5.0, CovRule::Ar(0.5)),
            6 => spec(DimRule::Pow34, per200(vec![2.0; 6], 2.0), 5.0, CovRule::BlockNearOne),
            other => return Err(Error::InvalidInput(format!("unknown scenario {other}"))),
        })
    }

    /// Logistic model with `p = 10`, `β = (3, 1.5, 0, 0, 2, 0, …)`, AR(0.3) design.
    pub fn glm_example() -> Self {
        ScenarioSpec {
            id: "glm-example".into(),
            p_rule: DimRule::Fixed(10),
            beta_rule: BetaRule { base: EXAMPLE_BETA.to_vec(), step_n: usize::MAX, block: 0, new_value: 0.0 },
            sigma: 0.0,
            cov_rule: CovRule::Ar(0.3),
            response: Response::Logistic,
            group: 3,
        }
    }

    /// Parses `"1"`..`"6"` or `"glm-example"`.
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "glm" | "glm-example" => Ok(Self::glm_example()),
            s => s
                .parse::<u8>()
                .map_err(|_| Error::InvalidInput(format!("unknown scenario `{s}`")))
                .and_then(Self::scenario),
        }
    }

    /// Adaptive Elastic-Net scenarios use grouped true covariates.
    pub fn default_scheme(&self) -> PenaltyScheme {
        match self.id.as_str() {
            "4" | "5" | "6" => PenaltyScheme::AdaptiveEnet,
            _ => PenaltyScheme::AdaptiveLasso,
        }
    }

    pub fn default_bootstrap(&self) -> BootstrapKind {
        match self.default_scheme() {
            PenaltyScheme::AdaptiveEnet => BootstrapKind::Residual,
            _ => BootstrapKind::Paired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDims {
    pub p: usize,
    pub p0: usize,
    pub beta: Vec<f64>,
}

impl ScenarioDims {
    pub fn truth(&self) -> Vec<usize> {
        self.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }

    pub fn proportion(&self) -> f64 {
        self.p0 as f64 / self.p as f64
    }
}

/// `p`, `p₀` and `β` of `spec` at sample size `n`.
pub fn scenario_dims(spec: &ScenarioSpec, n: usize) -> Result<ScenarioDims> {
    let p = spec.p_rule.p(n);
    let rule = &spec.beta_rule;
    let steps = if rule.step_n == usize::MAX { 0 } else { n.saturating_sub(ANCHOR_N) / rule.step_n };
    let mut beta = rule.base.clone();
    beta.extend(std::iter::repeat_n(rule.new_value, steps * rule.block));
    if beta.len() > p {
        return Err(Error::InvalidInput(format!(
            "scenario {} at n = {n} needs {} coefficients but p = {p}",
            spec.id,
            beta.len()
        )));
    }
    beta.resize(p, 0.0);
    let p0 = beta.iter().filter(|b| **b != 0.0).count();
    Ok(ScenarioDims { p, p0, beta })
}

/// Population covariance of the design.
pub fn population_covariance(spec: &ScenarioSpec, dims: &ScenarioDims) -> Array2<f64> {
    let p = dims.p;
    match spec.cov_rule {
        CovRule::Ar(rho) => Array2::from_shape_fn((p, p), |(i, j)| rho.powi(i.abs_diff(j) as i32)),
        CovRule::BlockNearOne => {
            let blocks = block_of(spec, dims);
            Array2::from_shape_fn((p, p), |(i, j)| match (blocks[i], blocks[j]) {
                _ if i == j && blocks[i].is_some() => 1.0 + BLOCK_NOISE * BLOCK_NOISE,
                _ if i == j => 1.0,
                (Some(a), Some(b)) if a == b => 1.0,
                _ => 0.0,
            })
        }
    }
}

fn block_of(spec: &ScenarioSpec, dims: &ScenarioDims) -> Vec<Option<usize>> {
    (0..dims.p).map(|j| (j < dims.p0).then_some(j / spec.group.max(1))).collect()
}

/// Population signal-to-noise ratio `βᵀΣβ/σ²`.
pub fn population_snr(spec: &ScenarioSpec, dims: &ScenarioDims) -> f64 {
    let beta = Array1::from(dims.beta.clone());
    let sigma = population_covariance(spec, dims);
    beta.dot(&sigma.dot(&beta)) / (spec.sigma * spec.sigma)
}

fn standard_normals(rng: &mut impl Rng, shape: (usize, usize)) -> Array2<f64> {
    let mut z = Array2::<f64>::zeros(shape);
    z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    z
}

fn draw_design(spec: &ScenarioSpec, dims: &ScenarioDims, n: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
    match spec.cov_rule {
        CovRule::Ar(_) => {
            let sigma = population_covariance(spec, dims);
            let l =
                cholesky(sigma.view(), 1e-12).ok_or_else(|| Error::SingularDesign("Σ not positive definite".into()))?;
            Ok(standard_normals(rng, (n, dims.p)).dot(&l.t()))
        }
        CovRule::BlockNearOne => {
            let blocks = block_of(spec, dims);
            let nblocks = blocks.iter().flatten().max().map_or(0, |b| b + 1);
            let factors = standard_normals(rng, (n, nblocks));
            let mut x = standard_normals(rng, (n, dims.p));
            for (j, b) in blocks.iter().enumerate() {
                if let Some(b) = *b {
                    for i in 0..n {
                        x[[i, j]] = factors[[i, b]] + BLOCK_NOISE * x[[i, j]];
                    }
                }
            }
            Ok(x)
        }
    }
}

fn cast<T: Real>(a: Array2<f64>) -> Array2<T> {
    a.mapv(T::lit)
}

/// `n` rows of the linear model `y = Xβ + σε` with the spec's design.
pub fn generate_scenario<T: Real>(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<Dataset<T>> {
    if spec.response != Response::Gaussian {
        return Err(Error::InvalidInput(format!("scenario {} has a binary response", spec.id)));
    }
    let dims = scenario_dims(spec, n)?;
    let mut rng = rng_from_seed(seed);
    let x = draw_design(spec, &dims, n, &mut rng)?;
    let beta = Array1::from(dims.beta.clone());
    let mut y = x.dot(&beta);
    for v in y.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *v += spec.sigma * e;
    }
    Dataset::new(cast(x), y.mapv(T::lit))?.with_truth(dims.truth())
}

/// `n` rows of the logistic model `P(y = 1 | x) = σ(xᵀβ)`.
pub fn generate_glm<T: Real>(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<GlmDataset<T>> {
    let dims = scenario_dims(spec, n)?;
    let mut rng = rng_from_seed(seed);
    let x = draw_design(spec, &dims, n, &mut rng)?;
    let beta = Array1::from(dims.beta.clone());
    let eta = x.dot(&beta);
    let y = eta.mapv(|e| if rng.random::<f64>() < sigmoid(e) { 1.0 } else { 0.0 });
    GlmDataset::new(cast(x), y.mapv(T::lit))?.with_truth(dims.truth())
}

/// The illustrative `n = 100` instance of the fixed-dimension design.
pub fn example1<T: Real>(seed: u64) -> Result<Dataset<T>> {
    generate_scenario(&ScenarioSpec::scenario(1)?, ANCHOR_N, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub runs: usize,
    pub proportion_correct: f64,
    pub avg_false_nonzeros: f64,
    pub avg_false_zeros: f64,
    pub avg_model_size: f64,
}

/// Averages of exact-match rate, `|S \ A|`, `|A \ S|` and `|S|` over `selections`.
pub fn compute_metrics(selections: &[Vec<usize>], truth: &[usize]) -> Result<MetricsSummary> {
    if selections.is_empty() {
        return Err(Error::InvalidInput("no selections to summarize".into()));
    }
    let (mut correct, mut fnz, mut fz, mut size) = (0usize, 0usize, 0usize, 0usize);
    for s in selections {
        let extra = s.iter().filter(|j| !truth.contains(j)).count();
        let missed = truth.iter().filter(|j| !s.contains(j)).count();
        correct += usize::from(extra == 0 && missed == 0);
        fnz += extra;
        fz += missed;
        size += s.len();
    }
    let r = selections.len() as f64;
    Ok(MetricsSummary {
        runs: selections.len(),
        proportion_correct: correct as f64 / r,
        avg_false_nonzeros: fnz as f64 / r,
        avg_false_zeros: fz as f64 / r,
        avg_model_size: size as f64 / r,
    })
}

/// Settings shared by every replicate of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings<T> {
    pub scheme: PenaltyScheme,
    pub bootstrap: BootstrapKind,
    pub gamma: T,
    /// Candidate `λ₂` values, BIC-tuned per dataset for ridge schemes.
    pub lambda2_grid: Vec<T>,
    pub replicates: usize,
    pub max_steps: Option<usize>,
    pub cv: CvConfig<T>,
}

impl<T: Real> SimSettings<T> {
    pub fn for_scenario(spec: &ScenarioSpec) -> Self {
        SimSettings {
            scheme: spec.default_scheme(),
            bootstrap: spec.default_bootstrap(),
            gamma: T::one(),
            lambda2_grid: DEFAULT_RIDGE_GRID.iter().map(|&v| T::lit(v)).collect(),
            replicates: 100,
            max_steps: None,
            cv: CvConfig::default(),
        }
    }

    fn mf_settings(&self, data: &Dataset<T>) -> Result<MfSettings<T>> {
        let lambda2 = if self.scheme.has_ridge() { tune_enet_lambda2(data, &self.lambda2_grid)? } else { T::zero() };
        let bootstrap = match self.bootstrap {
            BootstrapKind::Paired => BootstrapScheme::paired(),
            BootstrapKind::Residual => BootstrapScheme::residual(),
        };
        Ok(MfSettings {
            penalty: PenaltySpec::new(self.scheme, self.gamma, lambda2)?,
            bootstrap,
            replicates: self.replicates,
            max_steps: self.max_steps,
        })
    }
}

/// One dataset of a campaign and what each method selected on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub fingerprint: u64,
    /// Aligned with the campaign's method list; `None` when the method failed.
    pub selections: Vec<Option<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub n: usize,
    pub p: usize,
    pub p0: usize,
    pub method: Method,
    pub failures: usize,
    pub metrics: Option<MetricsSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
}

/// Hash of the exact bits of `x` and `y`.
pub fn dataset_fingerprint<T: Real>(x: ndarray::ArrayView2<'_, T>, y: ndarray::ArrayView1<'_, T>) -> u64 {
    let mut h = DefaultHasher::new();
    x.dim().hash(&mut h);
    for v in x.iter().chain(y.iter()) {
        v.to_f64_lossy().to_bits().hash(&mut h);
    }
    h.finish()
}

fn select_gaussian<T: Real>(
    data: &Dataset<T>,
    methods: &[Method],
    settings: &SimSettings<T>,
    seed: u64,
) -> Vec<Option<Vec<usize>>> {
    let mf = match settings.mf_settings(data) {
        Ok(m) => m,
        Err(e) => {
            warn!("pilot tuning failed: {e}");
            return vec![None; methods.len()];
        }
    };
    let cfg = CvConfig { seed: derive_seed(seed, 2, 0), ..settings.cv };
    let boot_seed = derive_seed(seed, 1, 0);
    let table = if methods.iter().any(|m| matches!(m, Method::Wmf | Method::Mf)) {
        Some(crate::select::mf_table(data, &mf, boot_seed))
    } else {
        None
    };
    methods
        .iter()
        .map(|&m| {
            let out: Result<SelectionResult<T>> = match (m, &table) {
                (Method::Wmf, Some(Ok(t))) => crate::select::wmf_select_from_table(data, t, &mf, &cfg, boot_seed),
                (Method::Mf, Some(Ok(t))) => mf_select(t),
                (Method::Wmf | Method::Mf, Some(Err(e))) => Err(e.clone()),
                _ => run_method(data, m, &mf, &cfg, boot_seed).map(|(r, _)| r),
            };
            out.map(|r| r.model).map_err(|e| warn!("{m} failed: {e}")).ok()
        })
        .collect()
}

fn select_logistic<T: Real>(
    data: &GlmDataset<T>,
    methods: &[Method],
    settings: &SimSettings<T>,
    seed: u64,
) -> Vec<Option<Vec<usize>>> {
    let glm = GlmSettings { gamma: settings.gamma, replicates: settings.replicates, ..GlmSettings::default() };
    let cfg = CvConfig { seed: derive_seed(seed, 2, 0), ..settings.cv };
    let boot_seed = derive_seed(seed, 1, 0);
    let path = std::cell::OnceCell::new();
    let table = std::cell::OnceCell::new();
    methods
        .iter()
        .map(|&m| {
            let out: Result<Vec<usize>> = match m {
                Method::Wmf | Method::Mf => match table.get_or_init(|| glm_mf_table(data, &glm, boot_seed)) {
                    Ok(t) if m == Method::Wmf => glm_wmf_select_from_table(data, t, &cfg, boot_seed).map(|r| r.model),
                    Ok(t) => mf_select::<T>(t).map(|r| r.model),
                    Err(e) => Err(e.clone()),
                },
                other => {
                    let c = other.criterion().expect("criterion method");
                    match path.get_or_init(|| glm_default_path(data, &glm)) {
                        Ok(p) => glm_criterion_select(data, p, c, &cfg).map(|r| r.model),
                        Err(e) => Err(e.clone()),
                    }
                }
            };
            out.map_err(|e| warn!("{m} failed: {e}")).ok()
        })
        .collect()
}

/// Runs every method on `R` datasets per sample size. Dataset `r` at
/// `n_list[i]` is drawn from `derive_seed(master_seed, r, i)`; summaries are
/// ordered by `n` then method.
pub fn run_replications<T: Real>(
    spec: &ScenarioSpec,
    methods: &[Method],
    n_list: &[usize],
    r: usize,
    master_seed: u64,
    settings: &SimSettings<T>,
) -> Result<Campaign> {
    if r == 0 {
        return Err(Error::InvalidInput("need R ≥ 1".into()));
    }
    if methods.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidInput("need at least one method and one sample size".into()));
    }
    let dims: Vec<ScenarioDims> = n_list.iter().map(|&n| scenario_dims(spec, n)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..n_list.len()).flat_map(|i| (0..r).map(move |b| (i, b))).collect();
    let records: Vec<ReplicateRecord> = jobs
        .into_par_iter()
        .map(|(i, b)| {
            let n = n_list[i];
            let seed = derive_seed(master_seed, b as u64, i as u64);
            let (fingerprint, selections) = match spec.response {
                Response::Gaussian => generate_scenario::<T>(spec, n, seed)
                    .map(|d| (dataset_fingerprint(d.x(), d.y()), select_gaussian(&d, methods, settings, seed))),
                Response::Logistic => generate_glm::<T>(spec, n, seed)
                    .map(|d| (dataset_fingerprint(d.x(), d.y()), select_logistic(&d, methods, settings, seed))),
            }
            .unwrap_or_else(|e| {
                warn!("replicate {b} at n = {n} could not be generated: {e}");
                (0, vec![None; methods.len()])
            });
            ReplicateRecord { n, replicate: b, seed, fingerprint, selections }
        })
        .collect();
    let mut summaries = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let truth = dims[i].truth();
        for (k, &m) in methods.iter().enumerate() {
            let picked: Vec<Vec<usize>> =
                records[i * r..(i + 1) * r].iter().filter_map(|rec| rec.selections[k].clone()).collect();
            let failures = r - picked.len();
            let metrics = if picked.is_empty() { None } else { Some(compute_metrics(&picked, &truth)?) };
            summaries.push(MethodSummary { n, p: dims[i].p, p0: dims[i].p0, method: m, failures, metrics });
        }
    }
    Ok(Campaign { records, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_follow_growth_schedules() {
        let cases = [(2u8, 300usize, 17usize, 8usize), (3, 500, 106, 13), (5, 100, 32, 6), (4, 500, 22, 9)];
        for (id, n, p, p0) in cases {
            let d = scenario_dims(&ScenarioSpec::scenario(id).unwrap(), n).unwrap();
            assert_eq!((d.p, d.p0), (p, p0), "scenario {id} at n = {n}");
        }
    }

    #[test]
    fn scenario_one_snr() {
        let spec = ScenarioSpec::scenario(1).unwrap();
        let snr = population_snr(&spec, &scenario_dims(&spec, 100).unwrap());
        assert!((snr - 2.02).abs() < 0.01, "{snr}");
    }

    #[test]
    fn metrics_of_perfect_selection() {
        let m = compute_metrics(&[vec![0, 1, 4], vec![0, 1, 4]], &[0, 1, 4]).unwrap();
        assert_eq!(
            (m.proportion_correct, m.avg_false_nonzeros, m.avg_false_zeros, m.avg_model_size),
            (1.0, 0.0, 0.0, 3.0)
        );
        let m = compute_metrics(&[vec![0, 1, 2, 4]], &[0, 1, 4]).unwrap();
        assert_eq!((m.proportion_correct, m.avg_false_nonzeros), (0.0, 1.0));
    }

    #[test]
    fn noiseless_response_is_exact() {
        let mut spec = ScenarioSpec::scenario(1).unwrap();
        spec.sigma = 0.0;
        let d = generate_scenario::<f64>(&spec, 50, 3).unwrap();
        let beta = Array1::from(scenario_dims(&spec, 50).unwrap().beta);
        let r = &d.y() - &d.x().dot(&beta);
        assert!(r.iter().all(|v| *v == 0.0));
    }
}
