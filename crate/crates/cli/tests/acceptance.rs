//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails. `ACCEPTANCE_ONLY=4,6` runs a subset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use wmfsel_core::model::{adaptive_weights, default_pilot, PenaltySpec};
use wmfsel_core::path::{
    cd_solve, coefficients_at, default_max_steps, kkt_residual, lars_lasso_path, penalized_path,
    soft_threshold_orthogonal,
};
use wmfsel_core::resample::derive_seed;
use wmfsel_core::screen::{default_screen_size, sis_screen};
use wmfsel_core::select::{mcv_error, penalty_weights, sigma2_estimate, wmf_select, CvConfig, MfSettings};
use wmfsel_core::sim::{generate_scenario, run_replications, scenario_dims, Campaign, ScenarioSpec, SimSettings};
use wmfsel_core::{Dataset, Dataset64, Method};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

fn orthonormal(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    let a = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = a.qr().q();
    Array2::from_shape_fn((n, p), |(i, j)| q[(i, j)])
}

fn orthogonal_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for design in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + design);
        let p = rng.random_range(2..=16);
        let n = rng.random_range(p + 2..=64);
        let x = orthonormal(&mut rng, n, p);
        let beta = Array1::from_shape_fn(p, |_| if rng.random_bool(0.5) { rng.random_range(-4.0..4.0) } else { 0.0 });
        let noise = Array1::from_shape_fn(n, |_| 0.5 * rng.sample::<f64, _>(StandardNormal));
        let y = x.dot(&beta) + noise;
        let d = Dataset::new(x, y).unwrap().without_intercept();
        let w = adaptive_weights(&default_pilot(&d).unwrap(), 1.0);
        let path = lars_lasso_path(&d, w.view(), p).unwrap();
        let top = path.points[0].lambda;
        let mut lambdas: Vec<f64> = path.points.iter().map(|pt| pt.lambda).collect();
        lambdas.extend(path.points.windows(2).map(|k| 0.5 * (k[0].lambda + k[1].lambda)));
        lambdas.extend((0..5).map(|_| rng.random_range(0.0..1.2) * top));
        for lambda in lambdas {
            let st = soft_threshold_orthogonal(&d, w.view(), lambda).unwrap();
            let ours = coefficients_at(&path, lambda);
            for j in 0..p {
                worst = worst.max((ours.values[j] - st.values[j]).abs());
            }
            checked += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-8,
        detail: format!("50 designs, {checked} λ values, max |Δβ| = {worst:.2e} (tol 1e-8)"),
    }
}

/// Unit-norm columns and response, so absolute tolerances are meaningful.
fn normalized_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset64 {
    let mut x = gaussian(rng, n, p);
    let beta = Array1::from_shape_fn(p, |j| if j % 4 == 0 { rng.random_range(0.5..3.0) } else { 0.0 });
    let mut y = x.dot(&beta) + Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
    for mut col in x.columns_mut() {
        let m = col.mean().unwrap();
        col.mapv_inplace(|v| v - m);
        let s = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / s);
    }
    let m = y.mean().unwrap();
    y.mapv_inplace(|v| v - m);
    let s = y.dot(&y).sqrt();
    y.mapv_inplace(|v| v / s);
    Dataset::new(x, y).unwrap()
}

fn kkt_path_correctness() -> Outcome {
    let mut worst_kkt = 0.0f64;
    let mut worst_cd = 0.0f64;
    let mut knots = 0usize;
    for inst in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + inst);
        let p = rng.random_range(2..=50);
        let n = rng.random_range((p + 5).max(20)..=200);
        let d = normalized_instance(&mut rng, n, p);
        // even instances: adaptive LASSO; odd: adaptive Elastic-Net cycling λ₂
        let spec = if inst % 2 == 0 {
            PenaltySpec::adaptive_lasso()
        } else {
            PenaltySpec::adaptive_enet([0.0, 0.5, 5.0][(inst / 2 % 3) as usize]).unwrap()
        };
        let w = penalty_weights(&d, &spec).unwrap();
        let path = penalized_path(&d, spec, w.view(), default_max_steps(n, p)).unwrap();
        let l2 = spec.lambda2();
        for (k, pt) in path.points.iter().enumerate() {
            let naive = path.naive_coefficients(k);
            worst_kkt = worst_kkt.max(kkt_residual(&d, w.view(), pt.lambda, l2, naive.view()));
            let cd = cd_solve(&d, w.view(), pt.lambda, l2, 1e-12).unwrap();
            for j in 0..p {
                worst_cd = worst_cd.max((cd.values[j] - naive[j]).abs());
            }
            knots += 1;
        }
    }
    Outcome {
        pass: worst_kkt <= 1e-6 && worst_cd <= 1e-6,
        detail: format!(
            "100 instances, {knots} knots, max KKT violation {worst_kkt:.2e}, max |β − β_cd| {worst_cd:.2e} (tol 1e-6)"
        ),
    }
}

fn marginal_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    let n = 50;
    let x = orthonormal(&mut rng, n, 3);
    let beta = Array1::from(vec![1.0, 0.5, 0.5]);
    let mean = x.dot(&beta);
    let draws = 10_000;
    let (mut stronger, mut tied) = (0usize, 0usize);
    for _ in 0..draws {
        let y = &mean + &Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        let z = x.t().dot(&y);
        stronger += usize::from(z[0].abs() > z[1].abs());
        tied += usize::from(z[1].abs() > z[2].abs());
    }
    let (ps, pt) = (stronger as f64 / draws as f64, tied as f64 / draws as f64);
    Outcome {
        pass: ps > 0.5 && (pt - 0.5).abs() <= 0.02,
        detail: format!("P(|β|=1 beats |β|=0.5) = {ps:.4} (> 0.5); tied pair {pt:.4} (0.5 ± 0.02)"),
    }
}

/// Golden run on Example-1 data drawn with seed 2013.
const GOLDEN_MF_COUNTS: [usize; 9] = [96, 70, 100, 32, 17, 15, 8, 10, 23];

fn example_one_shape() -> Outcome {
    let data: Dataset64 = wmfsel_core::sim::example1(2013).unwrap();
    let settings = MfSettings::adaptive_lasso().with_replicates(100);
    let cfg = CvConfig { folds: 10, seed: derive_seed(2013, 2, 0), ..CvConfig::default() };
    let r = wmf_select(&data, &settings, &cfg, 2013).unwrap();
    let counts: Vec<usize> = r.diagnostics.iter().map(|d| (d.mf_frequency * 100.0).round() as usize).collect();
    let low = r.diagnostics[..3].iter().map(|d| d.mf_frequency).fold(f64::INFINITY, f64::min);
    let high = r.diagnostics[3..].iter().map(|d| d.mf_frequency).fold(0.0, f64::max);
    let argmax = r
        .diagnostics
        .iter()
        .filter(|d| d.wmf.is_some())
        .max_by(|a, b| a.wmf.unwrap().total_cmp(&b.wmf.unwrap()))
        .map(|d| d.dimension);
    let golden = counts == GOLDEN_MF_COUNTS;
    Outcome {
        pass: low > high && argmax == Some(3) && r.model == [0, 1, 4] && golden,
        detail: format!(
            "min MF/B (j≤3) {low:.2} vs max (3<j<10) {high:.2}; argmax WMF j = {argmax:?}; model {:?}; golden MF {}",
            r.model.iter().map(|j| j + 1).collect::<Vec<_>>(),
            if golden { "match" } else { "differs" }
        ),
    }
}

fn dimension_table() -> Outcome {
    // (scenario, n, p, p0, printed proportion)
    let table: [(u8, usize, usize, usize, f64); 18] = [
        (1, 100, 10, 3, 0.3),
        (1, 300, 10, 3, 0.3),
        (1, 500, 10, 3, 0.3),
        (2, 100, 10, 3, 0.3),
        (2, 300, 17, 8, 0.47),
        (2, 500, 22, 13, 0.59),
        (3, 100, 32, 3, 0.09),
        (3, 300, 72, 8, 0.11),
        (3, 500, 106, 13, 0.12),
        (4, 100, 10, 3, 0.3),
        (4, 300, 17, 6, 0.35),
        (4, 500, 22, 9, 0.41),
        (5, 100, 32, 6, 0.19),
        (5, 300, 72, 9, 0.13),
        (5, 500, 106, 12, 0.11),
        (6, 100, 32, 6, 0.19),
        (6, 300, 72, 9, 0.13),
        (6, 500, 106, 12, 0.11),
    ];
    let mut wrong = Vec::new();
    for (s, n, p, p0, prop) in table {
        let d = scenario_dims(&ScenarioSpec::scenario(s).unwrap(), n).unwrap();
        let shown = (d.proportion() * 100.0).round() / 100.0;
        if d.p != p || d.p0 != p0 || shown != prop {
            wrong.push(format!("s{s} n{n}: ({}, {}, {shown})", d.p, d.p0));
        }
    }
    Outcome { pass: wrong.is_empty(), detail: format!("18 (scenario, n) cells, mismatches: {wrong:?}") }
}

fn summary(c: &Campaign, n: usize, m: Method) -> wmfsel_core::sim::MetricsSummary {
    c.summaries.iter().find(|s| s.n == n && s.method == m).and_then(|s| s.metrics).expect("summary present")
}

fn scenario_one_trend() -> Outcome {
    let spec = ScenarioSpec::scenario(1).unwrap();
    let settings = SimSettings::<f64>::for_scenario(&spec);
    let ns = [100, 300, 500];
    let c = run_replications(&spec, &[Method::Wmf, Method::Bic], &ns, 100, 7, &settings).unwrap();
    let wmf: Vec<_> = ns.iter().map(|&n| summary(&c, n, Method::Wmf)).collect();
    let bic: Vec<_> = ns.iter().map(|&n| summary(&c, n, Method::Bic)).collect();
    let monotone = wmf.windows(2).all(|w| w[1].proportion_correct >= w[0].proportion_correct - 0.05);
    let beats = wmf.iter().zip(&bic).all(|(w, b)| w.proportion_correct >= b.proportion_correct - 0.05);
    let fnz = wmf[2].avg_false_nonzeros <= 0.3 && bic[2].avg_false_nonzeros > wmf[2].avg_false_nonzeros;
    let pc = |v: &[wmfsel_core::sim::MetricsSummary]| {
        v.iter().map(|m| format!("{:.2}", m.proportion_correct)).collect::<Vec<_>>().join("/")
    };
    Outcome {
        pass: monotone && beats && fnz,
        detail: format!(
            "pc WMF {} BIC {}; false non-zeros at n=500 WMF {:.2} BIC {:.2}",
            pc(&wmf),
            pc(&bic),
            wmf[2].avg_false_nonzeros,
            bic[2].avg_false_nonzeros
        ),
    }
}

fn mcv_separation() -> Outcome {
    let spec = ScenarioSpec::scenario(1).unwrap();
    let full: Vec<usize> = (0..10).collect();
    let (mut separated, mut close) = (0, 0);
    for r in 0..100u64 {
        let d: Dataset64 = generate_scenario(&spec, 300, derive_seed(4000, r, 0)).unwrap();
        let seed = derive_seed(4000, r, 1);
        let under = mcv_error(&d, &[0], 10, seed).unwrap();
        let truth = mcv_error(&d, &[0, 1, 4], 10, seed).unwrap();
        let all = mcv_error(&d, &full, 10, seed).unwrap();
        let s2 = sigma2_estimate(&d).unwrap();
        separated += usize::from(under > truth);
        close += usize::from((truth - all).abs() < 5.0 * 10.0 / 300.0 * s2);
    }
    Outcome {
        pass: separated >= 95 && close >= 90,
        detail: format!("underfit above true in {separated}/100 (≥ 95); |true − full| small in {close}/100 (≥ 90)"),
    }
}

fn glm_trend() -> Outcome {
    let spec = ScenarioSpec::glm_example();
    let settings = SimSettings::<f64>::for_scenario(&spec);
    let c = run_replications(&spec, &[Method::Wmf, Method::Bic], &[500], 100, 7, &settings).unwrap();
    let (w, b) = (summary(&c, 500, Method::Wmf), summary(&c, 500, Method::Bic));
    Outcome {
        pass: w.proportion_correct >= b.proportion_correct - 0.05
            && (w.avg_model_size - 3.0).abs() < (b.avg_model_size - 3.0).abs(),
        detail: format!(
            "n=500: pc WMF {:.2} BIC {:.2}; mean size WMF {:.2} BIC {:.2}",
            w.proportion_correct, b.proportion_correct, w.avg_model_size, b.avg_model_size
        ),
    }
}

fn wmfsel(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wmfsel")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn replay_identical(root: &Path, first: &[&str], name: &str) -> Result<usize, String> {
    let a = root.join(format!("{name}-a"));
    let mut args = first.to_vec();
    args.extend(["--out", a.to_str().unwrap()]);
    wmfsel(&args)?;
    let manifest = a.join("manifest.json");
    let reference = read_dir_bytes(&a);
    for threads in ["1", "8"] {
        let b = root.join(format!("{name}-t{threads}"));
        wmfsel(&[
            "rerun",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--threads",
            threads,
        ])?;
        if read_dir_bytes(&b) != reference {
            return Err(format!("{name}: rerun at {threads} threads differs"));
        }
    }
    Ok(reference.len())
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root: PathBuf = tmp.path().into();
    let run = || -> Result<usize, String> {
        let gen = root.join("gen");
        wmfsel(&["generate", "--scenario", "1", "--n", "120", "--seed", "11", "--out", gen.to_str().unwrap()])?;
        let glm = root.join("glm");
        wmfsel(&["generate", "--scenario", "glm", "--n", "150", "--seed", "12", "--out", glm.to_str().unwrap()])?;
        let data = gen.join("data.csv");
        let bin = glm.join("data.csv");
        let mut files = 0;
        files += replay_identical(
            &root,
            &["select", "--data", data.to_str().unwrap(), "--seed", "3", "-B", "50", "--threads", "8"],
            "select",
        )?;
        files += replay_identical(
            &root,
            &["select", "--data", data.to_str().unwrap(), "--seed", "3", "--method", "cv-1se", "--penalty", "aenet"],
            "select-aenet",
        )?;
        files += replay_identical(
            &root,
            &["select", "--data", bin.to_str().unwrap(), "--seed", "4", "-B", "20"],
            "select-glm",
        )?;
        files += replay_identical(
            &root,
            &["simulate", "--scenario", "4", "--n", "60,90", "-R", "4", "-B", "20", "--seed", "5", "--threads", "8"],
            "simulate",
        )?;
        Ok(files)
    };
    match run() {
        Ok(files) => {
            Outcome { pass: true, detail: format!("4 runs, {files} files byte-identical on replay at 1 and 8 threads") }
        }
        Err(e) => Outcome { pass: false, detail: e },
    }
}

fn sis_retention() -> Outcome {
    let (n, p) = (200, 400);
    let dn = default_screen_size(n);
    let mut kept_all = 0;
    for r in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(5000, r, 0));
        let x = gaussian(&mut rng, n, p);
        let mut truth: Vec<usize> = Vec::new();
        while truth.len() < 3 {
            let j = rng.random_range(0..p);
            if !truth.contains(&j) {
                truth.push(j);
            }
        }
        let mut beta = Array1::zeros(p);
        for &j in &truth {
            beta[j] = if rng.random_bool(0.5) { 2.0 } else { -2.0 };
        }
        let y = x.dot(&beta) + Array1::from_shape_fn(n, |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
        let kept = sis_screen(x.view(), y.view(), dn).unwrap().kept;
        kept_all += usize::from(truth.iter().all(|j| kept.contains(j)));
    }
    Outcome { pass: kept_all >= 95, detail: format!("d_n = {dn}; full support retained in {kept_all}/100 (≥ 95)") }
}

fn main() {
    let criteria: [(u8, &str, u64, Check); 10] = [
        (1, "orthogonal oracle equivalence", 10, orthogonal_oracle),
        (2, "KKT path correctness", 60, kkt_path_correctness),
        (3, "marginal ordering Monte Carlo", 5, marginal_ordering),
        (4, "Example-1 MF/WMF shape", 30, example_one_shape),
        (5, "scenario dimension table", 1, dimension_table),
        (6, "Scenario-1 convergence trend", 900, scenario_one_trend),
        (7, "MCV separation", 120, mcv_separation),
        (8, "logistic example trend", 600, glm_trend),
        (9, "manifest replay determinism", 120, determinism),
        (10, "SIS retention", 60, sis_retention),
    ];
    let only: Option<Vec<u8>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let pass = outcome.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s, budget {budget}s{}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            took.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
