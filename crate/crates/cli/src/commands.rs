//! The subcommands. Each resolves its options into a [`RunConfig`], runs,
//! and writes its result files plus a manifest that replays the run.

use std::path::Path;

use ndarray::Axis;
use serde::Serialize;
use wmfsel_core::glm::{
    classify, glm_criterion_select, glm_default_path, glm_mcv, glm_mf_table, glm_wmf_select, logistic_refit,
    predict_proba, GlmLoss, GlmSettings,
};
use wmfsel_core::model::PenaltySpec;
use wmfsel_core::resample::{derive_seed, BootstrapScheme};
use wmfsel_core::screen::{default_screen_size, sis_screen};
use wmfsel_core::select::{full_path, mf_select, run_method, tune_enet_lambda2, CvConfig, RefitMode};
use wmfsel_core::sim::{
    generate_glm, generate_scenario, run_replications, scenario_dims, Response, ScenarioSpec, SimSettings,
};
use wmfsel_core::{Dataset64, GlmDataset64, Method, MfSettings, SelectionResult64, SolutionPath64};

use crate::config::{
    BootstrapArg, ClassifyConfig, GenerateConfig, Manifest, PenaltyArg, PipelineConfig, RunConfig, ScreenConfig,
    SelectConfig, SimulateConfig, MANIFEST_FILE,
};
use crate::error::{CliError, Result};
use crate::io::{fmt_f, load_csv, save_csv, write_json, write_rows, Loaded, Table};

/// Stream of the CV fold assignment, derived from the master seed.
const CV_STREAM: u64 = 2;

pub fn execute(run: &RunConfig, out: &Path) -> Result<()> {
    crate::io::ensure_dir(out)?;
    let outputs = match run {
        RunConfig::Select(c) => select(c, out)?,
        RunConfig::Simulate(c) => simulate(c, out)?,
        RunConfig::Screen(c) => screen(c, out)?,
        RunConfig::Classify(c) => classify_cmd(c, out)?,
        RunConfig::Generate(c) => generate(c, out)?,
    };
    log::info!("wrote {} and {MANIFEST_FILE} to {}", outputs.join(", "), out.display());
    write_json(&out.join(MANIFEST_FILE), &Manifest::new(run.clone(), outputs))
}

fn cv_config(p: &PipelineConfig, seed: u64) -> CvConfig<f64> {
    CvConfig { folds: p.folds, c: p.c, sigma2: None, refit: RefitMode::Ols, seed: derive_seed(seed, CV_STREAM, 0) }
}

fn mf_settings(p: &PipelineConfig, data: &Dataset64) -> Result<MfSettings<f64>> {
    let lambda2 = match p.penalty {
        PenaltyArg::Alasso => 0.0,
        PenaltyArg::Aenet => tune_enet_lambda2(data, &p.lambda2_grid)?,
    };
    let bootstrap = match p.bootstrap {
        BootstrapArg::Paired => BootstrapScheme::paired(),
        BootstrapArg::Residual => BootstrapScheme::residual(),
    };
    Ok(MfSettings {
        penalty: PenaltySpec::new(p.penalty.scheme(), p.gamma, lambda2)?,
        bootstrap,
        replicates: p.replicates,
        max_steps: p.max_steps,
    })
}

fn glm_settings(p: &PipelineConfig) -> Result<GlmSettings<f64>> {
    if p.penalty == PenaltyArg::Aenet {
        return Err(CliError::Usage("binary responses support only --penalty alasso".into()));
    }
    Ok(GlmSettings { gamma: p.gamma, replicates: p.replicates, ..GlmSettings::default() })
}

fn indices_1based(cols: &[usize]) -> Vec<usize> {
    cols.iter().map(|j| j + 1).collect()
}

fn names_of(names: &[String], cols: &[usize]) -> Vec<String> {
    cols.iter().map(|&j| names[j].clone()).collect()
}

fn joined(cols: &[usize]) -> String {
    cols.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct DimensionRow {
    dimension: usize,
    mf_frequency: f64,
    model: Option<Vec<String>>,
    mcv: Option<f64>,
    weight: Option<f64>,
    wmf: Option<f64>,
}

#[derive(Serialize)]
struct SelectionFile {
    method: Method,
    response: String,
    family: &'static str,
    n: usize,
    p: usize,
    penalty: PenaltyArg,
    lambda2: f64,
    dimension: usize,
    model: Vec<String>,
    model_indices: Vec<usize>,
    knot: Option<usize>,
    knot_lambda: Option<f64>,
    diagnostics: Vec<DimensionRow>,
}

fn path_rows(path: &SolutionPath64, names: &[String], scores: &[f64]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> =
        ["step", "lambda", "size", "active", "intercept"].iter().map(|s| s.to_string()).collect();
    header.extend(names.iter().cloned());
    if !scores.is_empty() {
        header.push("score".into());
    }
    let rows = path
        .points
        .iter()
        .enumerate()
        .map(|(k, pt)| {
            let mut row = vec![
                pt.step.to_string(),
                fmt_f(pt.lambda),
                pt.active_set.len().to_string(),
                joined(&pt.active_set),
                pt.coefficients.intercept.map(fmt_f).unwrap_or_default(),
            ];
            row.extend(pt.coefficients.values.iter().map(|&v| fmt_f(v)));
            if let Some(s) = scores.get(k) {
                row.push(fmt_f(*s));
            }
            row
        })
        .collect();
    (header, rows)
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn select(c: &SelectConfig, out: &Path) -> Result<Vec<String>> {
    let table = load_csv(&c.data, &c.response)?;
    let names = table.names.clone();
    let seed = c.seed;
    let cfg = cv_config(&c.pipeline, seed);
    let (family, n, p, lambda2, result, path): (_, _, _, _, SelectionResult64, SolutionPath64) =
        match table.into_dataset()? {
            Loaded::Linear(data) => {
                let settings = mf_settings(&c.pipeline, &data)?;
                let (result, path) = run_method(&data, c.method, &settings, &cfg, seed)?;
                let path = match path {
                    Some(p) => p,
                    None => full_path(&data, &settings)?,
                };
                ("gaussian", data.n(), data.p(), settings.penalty.lambda2(), result, path)
            }
            Loaded::Binary(data) => {
                let settings = glm_settings(&c.pipeline)?;
                let path = glm_default_path(&data, &settings)?;
                let result = match c.method {
                    Method::Wmf => glm_wmf_select(&data, &settings, &cfg, seed)?,
                    Method::Mf => mf_select(&glm_mf_table(&data, &settings, seed)?)?,
                    m => glm_criterion_select(&data, &path, m.criterion().expect("criterion method"), &cfg)?,
                };
                ("binomial", data.n(), data.p(), 0.0, result, path)
            }
        };
    let file = SelectionFile {
        method: c.method,
        response: c.response.clone(),
        family,
        n,
        p,
        penalty: c.pipeline.penalty,
        lambda2,
        dimension: result.dimension,
        model: names_of(&names, &result.model),
        model_indices: indices_1based(&result.model),
        knot: result.knot,
        knot_lambda: result.knot.map(|k| path.points[k].lambda),
        diagnostics: result
            .diagnostics
            .iter()
            .map(|d| DimensionRow {
                dimension: d.dimension,
                mf_frequency: d.mf_frequency,
                model: d.model.as_ref().map(|m| names_of(&names, m)),
                mcv: d.mcv.filter(|v| v.is_finite()),
                weight: d.weight,
                wmf: d.wmf,
            })
            .collect(),
    };
    write_json(&out.join("selection.json"), &file)?;
    let (header, rows) = path_rows(&path, &names, &result.knot_scores);
    write_rows(&out.join("path.csv"), &header, rows)?;
    let mut outputs = vec!["selection.json".to_string(), "path.csv".to_string()];
    if !result.diagnostics.is_empty() {
        let header: Vec<String> =
            ["j", "mf_frequency", "mcv", "weight", "wmf", "model"].iter().map(|s| s.to_string()).collect();
        let rows = result
            .diagnostics
            .iter()
            .map(|d| {
                vec![
                    d.dimension.to_string(),
                    fmt_f(d.mf_frequency),
                    opt_f(d.mcv.filter(|v| v.is_finite())),
                    opt_f(d.weight),
                    opt_f(d.wmf),
                    d.model.as_deref().map(joined).unwrap_or_default(),
                ]
            })
            .collect();
        write_rows(&out.join("wmf_profile.csv"), &header, rows)?;
        outputs.push("wmf_profile.csv".into());
    }
    Ok(outputs)
}

pub fn simulate_spec(c: &SimulateConfig) -> Result<ScenarioSpec> {
    Ok(ScenarioSpec::from_id(&c.scenario)?)
}

#[derive(Serialize)]
struct ScenarioFacts {
    n: usize,
    p: usize,
    p0: usize,
    proportion: f64,
}

fn simulate(c: &SimulateConfig, out: &Path) -> Result<Vec<String>> {
    let spec = simulate_spec(c)?;
    let pc = &c.pipeline;
    let settings = SimSettings {
        scheme: pc.penalty.scheme(),
        bootstrap: pc.bootstrap.kind(),
        gamma: pc.gamma,
        lambda2_grid: pc.lambda2_grid.clone(),
        replicates: pc.replicates,
        max_steps: pc.max_steps,
        cv: CvConfig { folds: pc.folds, c: pc.c, ..CvConfig::default() },
    };
    let campaign = run_replications(&spec, &c.methods, &c.n, c.replications, c.seed, &settings)?;
    let header: Vec<String> = ["scenario", "n", "p", "p0", "method", "metric", "value", "runs", "failures"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for s in &campaign.summaries {
        let values = match s.metrics {
            Some(m) => [
                Some(m.proportion_correct),
                Some(m.avg_false_nonzeros),
                Some(m.avg_false_zeros),
                Some(m.avg_model_size),
            ],
            None => [None; 4],
        };
        let names = ["proportion_correct", "avg_false_nonzeros", "avg_false_zeros", "avg_model_size"];
        for (metric, v) in names.iter().zip(values) {
            rows.push(vec![
                c.scenario.clone(),
                s.n.to_string(),
                s.p.to_string(),
                s.p0.to_string(),
                s.method.to_string(),
                metric.to_string(),
                opt_f(v),
                s.metrics.map_or(0, |m| m.runs).to_string(),
                s.failures.to_string(),
            ]);
        }
    }
    write_rows(&out.join("metrics.csv"), &header, rows)?;
    let header: Vec<String> =
        ["n", "replicate", "seed", "fingerprint", "method", "model"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for rec in &campaign.records {
        for (m, sel) in c.methods.iter().zip(&rec.selections) {
            rows.push(vec![
                rec.n.to_string(),
                rec.replicate.to_string(),
                rec.seed.to_string(),
                format!("{:016x}", rec.fingerprint),
                m.to_string(),
                sel.as_deref().map(joined).unwrap_or_else(|| "failed".into()),
            ]);
        }
    }
    write_rows(&out.join("selections.csv"), &header, rows)?;
    let facts: Vec<ScenarioFacts> = c
        .n
        .iter()
        .map(|&n| scenario_dims(&spec, n).map(|d| ScenarioFacts { n, p: d.p, p0: d.p0, proportion: d.proportion() }))
        .collect::<wmfsel_core::Result<_>>()?;
    write_json(&out.join("scenario.json"), &facts)?;
    Ok(vec!["metrics.csv".into(), "selections.csv".into(), "scenario.json".into()])
}

fn screen(c: &ScreenConfig, out: &Path) -> Result<Vec<String>> {
    let table = load_csv(&c.data, &c.response)?;
    let res = sis_screen(table.x.view(), table.y.view(), c.dn)?;
    let header: Vec<String> = ["rank", "column", "name", "score"].iter().map(|s| s.to_string()).collect();
    let rows = res
        .kept
        .iter()
        .enumerate()
        .map(|(r, &j)| vec![(r + 1).to_string(), (j + 1).to_string(), table.names[j].clone(), fmt_f(res.scores[j])])
        .collect();
    write_rows(&out.join("screen.csv"), &header, rows)?;
    Ok(vec!["screen.csv".into()])
}

fn binary(table: &Table, path: &Path) -> Result<GlmDataset64> {
    if !table.is_binary() {
        return Err(CliError::Format { path: path.into(), message: "response must be 0/1 with both classes".into() });
    }
    Ok(GlmDataset64::new(table.x.clone(), table.y.clone())?)
}

fn classify_cmd(c: &ClassifyConfig, out: &Path) -> Result<Vec<String>> {
    let train_t = load_csv(&c.train, &c.response)?;
    let test_t = load_csv(&c.test, &c.response)?;
    if train_t.names != test_t.names {
        return Err(CliError::Format { path: c.test.clone(), message: "columns differ from the training file".into() });
    }
    let train = binary(&train_t, &c.train)?;
    let test_y = test_t.y.clone();
    if test_y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(CliError::Format { path: c.test.clone(), message: "response must be 0/1".into() });
    }
    let dn = c.dn.unwrap_or_else(|| default_screen_size(train.n())).min(train.p());
    let kept = sis_screen(train.x(), train.y(), dn)?.kept;
    let train_s = train.select_columns(&kept);
    let test_x = test_t.x.select(Axis(1), &kept);
    let settings = glm_settings(&c.pipeline)?;
    let cfg = cv_config(&c.pipeline, c.seed);
    let mut path = None;
    let mut table = None;
    let mut summary = Vec::new();
    let mut predictions = Vec::new();
    let mut models = Vec::new();
    for &m in &c.methods {
        let result = match m {
            Method::Wmf | Method::Mf => {
                if table.is_none() {
                    table = Some(glm_mf_table(&train_s, &settings, c.seed)?);
                }
                let t = table.as_ref().expect("filled above");
                if m == Method::Wmf {
                    wmfsel_core::glm::glm_wmf_select_from_table(&train_s, t, &cfg, c.seed)?
                } else {
                    mf_select(t)?
                }
            }
            other => {
                if path.is_none() {
                    path = Some(glm_default_path(&train_s, &settings)?);
                }
                let p = path.as_ref().expect("filled above");
                glm_criterion_select(&train_s, p, other.criterion().expect("criterion method"), &cfg)?
            }
        };
        let cols = &result.model;
        let xm = train_s.x().select(Axis(1), cols);
        let coef = logistic_refit(xm.view(), train_s.y())?;
        let prob = predict_proba(&coef, test_x.select(Axis(1), cols).view());
        let labels = classify(prob.view(), c.threshold)?;
        let test_err = labels.iter().zip(test_y.iter()).filter(|(l, y)| f64::from(**l) != **y).count();
        let cv_rate = glm_mcv(&train_s, cols, c.pipeline.folds, GlmLoss::Misclass, cfg.seed)?;
        let cv_err = (cv_rate * train_s.n() as f64).round() as usize;
        summary.push(vec![m.to_string(), cv_err.to_string(), test_err.to_string(), cols.len().to_string()]);
        let mut original: Vec<usize> = cols.iter().map(|&j| kept[j]).collect();
        original.sort_unstable();
        models.push(vec![m.to_string(), names_of(&train_t.names, &original).join(" ")]);
        for (i, (pr, l)) in prob.iter().zip(&labels).enumerate() {
            predictions.push(vec![m.to_string(), (i + 1).to_string(), fmt_f(*pr), l.to_string(), fmt_f(test_y[i])]);
        }
    }
    let header = |h: &[&str]| h.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    write_rows(
        &out.join("classification.csv"),
        &header(&["criteria", "ten_fold_cv_error", "test_error", "n_selected"]),
        summary,
    )?;
    write_rows(
        &out.join("predictions.csv"),
        &header(&["criteria", "row", "probability", "label", "truth"]),
        predictions,
    )?;
    write_rows(&out.join("models.csv"), &header(&["criteria", "selected"]), models)?;
    Ok(vec!["classification.csv".into(), "predictions.csv".into(), "models.csv".into()])
}

fn generate(c: &GenerateConfig, out: &Path) -> Result<Vec<String>> {
    let spec = ScenarioSpec::from_id(&c.scenario)?;
    let dims = scenario_dims(&spec, c.n)?;
    let names: Vec<String> = (1..=dims.p).map(|j| format!("x{j}")).collect();
    let (x, y) = match spec.response {
        Response::Gaussian => {
            let d: Dataset64 = generate_scenario(&spec, c.n, c.seed)?;
            (d.x().to_owned(), d.y().to_owned())
        }
        Response::Logistic => {
            let d: GlmDataset64 = generate_glm(&spec, c.n, c.seed)?;
            (d.x().to_owned(), d.y().to_owned())
        }
    };
    save_csv(&out.join(&c.file), &Table { names: names.clone(), response: "y".into(), x, y })?;
    #[derive(Serialize)]
    struct Truth {
        columns: Vec<String>,
        beta: Vec<f64>,
    }
    let truth = Truth { columns: names_of(&names, &dims.truth()), beta: dims.beta.clone() };
    write_json(&out.join("truth.json"), &truth)?;
    Ok(vec![c.file.clone(), "truth.json".into()])
}
