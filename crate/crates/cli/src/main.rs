use std::path::PathBuf;

use clap::{Parser, Subcommand};
use wmfsel_core::screen::default_screen_size;
use wmfsel_core::sim::{scenario_dims, ScenarioSpec, DEFAULT_N_LIST};
use wmfsel_core::Method;

mod commands;
mod config;
mod error;
mod io;

use config::{
    BootstrapArg, ClassifyConfig, GenerateConfig, Manifest, Options, PenaltyArg, PipelineConfig, RunConfig,
    ScreenConfig, SelectConfig, SimulateConfig,
};
use error::{CliError, Result};

/// Model selection for adaptive LASSO and adaptive Elastic-Net by
/// prediction-weighted maximum frequency.
#[derive(Debug, Parser)]
#[command(name = "wmfsel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML file with default options; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: Options,
}

impl Common {
    fn options(&self) -> Result<Options> {
        let file = match &self.config {
            Some(path) => Options::load(path)?,
            None => Options::default(),
        };
        Ok(self.opts.clone().over(file))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Select a model on a CSV dataset.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a simulation campaign on a built-in scenario.
    Simulate {
        /// 1 to 6, or `glm-example`.
        #[arg(long)]
        scenario: String,
        /// Sample sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Datasets per sample size.
        #[arg(short = 'R', long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Rank predictors by marginal correlation and keep the top d_n.
    Screen {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Screen, select and fit a logistic classifier; report train CV and test errors.
    Classify {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Write one dataset drawn from a built-in scenario.
    Generate {
        /// 1 to 6, or `glm-example`.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        n: usize,
        /// File name inside the output directory.
        #[arg(long, default_value = "data.csv")]
        file: String,
        #[command(flatten)]
        common: Common,
    },
    /// Replay the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory; defaults to the manifest's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn single_method(o: &Options) -> Result<Method> {
    let methods = o.methods(&[Method::Wmf])?;
    match methods.as_slice() {
        [m] => Ok(*m),
        _ => Err(CliError::Usage("select takes exactly one --method".into())),
    }
}

fn resolve(command: Command) -> Result<(RunConfig, PathBuf, Option<usize>)> {
    let (run, common) = match command {
        Command::Select { data, common } => {
            let o = common.options()?;
            let run = RunConfig::Select(SelectConfig {
                data: io::absolute(&data)?,
                response: o.response_or_default(),
                method: single_method(&o)?,
                seed: o.require_seed()?,
                pipeline: PipelineConfig::resolve(&o, PenaltyArg::Alasso, BootstrapArg::Paired)?,
            });
            (run, common)
        }
        Command::Simulate { scenario, n, replications, common } => {
            let o = common.options()?;
            let spec = ScenarioSpec::from_id(&scenario)?;
            let n = n.unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
            let p = n.iter().map(|&n| scenario_dims(&spec, n).map(|d| d.p)).collect::<wmfsel_core::Result<_>>()?;
            let pipeline = PipelineConfig::resolve(
                &o,
                PenaltyArg::from_scheme(spec.default_scheme()),
                BootstrapArg::from_kind(spec.default_bootstrap()),
            )?;
            let run = RunConfig::Simulate(SimulateConfig {
                scenario,
                n,
                p,
                replications: replications.unwrap_or(100),
                methods: o.methods(&Method::ALL)?,
                seed: o.require_seed()?,
                pipeline,
            });
            (run, common)
        }
        Command::Screen { data, common } => {
            let o = common.options()?;
            let response = o.response_or_default();
            let n = io::load_csv(&data, &response)?.n();
            let run = RunConfig::Screen(ScreenConfig {
                data: io::absolute(&data)?,
                response,
                dn: o.dn.unwrap_or_else(|| default_screen_size(n)),
            });
            (run, common)
        }
        Command::Classify { train, test, threshold, common } => {
            let o = common.options()?;
            let run = RunConfig::Classify(ClassifyConfig {
                train: io::absolute(&train)?,
                test: io::absolute(&test)?,
                response: o.response_or_default(),
                dn: o.dn,
                methods: o.methods(&Method::ALL)?,
                threshold: threshold.unwrap_or(0.5),
                seed: o.require_seed()?,
                pipeline: PipelineConfig::resolve(&o, PenaltyArg::Alasso, BootstrapArg::Paired)?,
            });
            (run, common)
        }
        Command::Generate { scenario, n, file, common } => {
            let o = common.options()?;
            ScenarioSpec::from_id(&scenario)?;
            let run = RunConfig::Generate(GenerateConfig { scenario, n, seed: o.require_seed()?, file });
            (run, common)
        }
        Command::Rerun { manifest, out, threads } => {
            let run = Manifest::load(&manifest)?.run;
            let out = match out {
                Some(out) => out,
                None => manifest.parent().map(PathBuf::from).unwrap_or_default(),
            };
            return Ok((run, out, threads));
        }
    };
    let threads = common.options()?.threads;
    Ok((run, common.out, threads))
}

fn run(cli: Cli) -> Result<()> {
    let (run, out, threads) = resolve(cli.command)?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    commands::execute(&run, &out)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
