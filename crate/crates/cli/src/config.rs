//! Option layering (flags over config file over defaults) and the resolved
//! run configurations recorded in manifests.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use wmfsel_core::model::{PenaltyScheme, DEFAULT_RIDGE_GRID};
use wmfsel_core::resample::BootstrapKind;
use wmfsel_core::Method;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyArg {
    Alasso,
    Aenet,
}

impl PenaltyArg {
    pub fn scheme(self) -> PenaltyScheme {
        match self {
            PenaltyArg::Alasso => PenaltyScheme::AdaptiveLasso,
            PenaltyArg::Aenet => PenaltyScheme::AdaptiveEnet,
        }
    }

    pub fn from_scheme(s: PenaltyScheme) -> Self {
        if s.has_ridge() {
            PenaltyArg::Aenet
        } else {
            PenaltyArg::Alasso
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapArg {
    Paired,
    Residual,
}

impl BootstrapArg {
    pub fn kind(self) -> BootstrapKind {
        match self {
            BootstrapArg::Paired => BootstrapKind::Paired,
            BootstrapArg::Residual => BootstrapKind::Residual,
        }
    }

    pub fn from_kind(k: BootstrapKind) -> Self {
        match k {
            BootstrapKind::Paired => BootstrapArg::Paired,
            BootstrapKind::Residual => BootstrapArg::Residual,
        }
    }
}

/// Settings shared by the commands. Every field is optional so that flags
/// and the config file can be layered.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, clap::Args)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
    /// Selection method(s): wmf, mf, bic, ebic, gic, cp, cv-min, cv-1se.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyArg>,
    #[arg(long, value_enum)]
    pub bootstrap: Option<BootstrapArg>,
    /// Bootstrap replicates B.
    #[arg(short = 'B', long = "replicates")]
    pub replicates: Option<usize>,
    /// CV folds K.
    #[arg(short = 'K', long = "folds")]
    pub folds: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Candidate λ₂ values for the adaptive Elastic-Net, comma separated.
    #[arg(long = "lambda2-grid", value_delimiter = ',')]
    pub lambda2_grid: Option<Vec<f64>>,
    /// Temperature multiplier of the dimension weights, in [1, 2].
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-steps")]
    pub max_steps: Option<usize>,
    /// Screening size d_n.
    #[arg(long)]
    pub dn: Option<usize>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Options {
    /// Fields set in `self` win over those in `file`.
    pub fn over(self, file: Options) -> Options {
        Options {
            response: self.response.or(file.response),
            method: self.method.or(file.method),
            penalty: self.penalty.or(file.penalty),
            bootstrap: self.bootstrap.or(file.bootstrap),
            replicates: self.replicates.or(file.replicates),
            folds: self.folds.or(file.folds),
            gamma: self.gamma.or(file.gamma),
            lambda2_grid: self.lambda2_grid.or(file.lambda2_grid),
            c: self.c.or(file.c),
            seed: self.seed.or(file.seed),
            max_steps: self.max_steps.or(file.max_steps),
            dn: self.dn.or(file.dn),
            threads: self.threads.or(file.threads),
        }
    }

    pub fn load(path: &Path) -> Result<Options> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Format { path: path.into(), message: e.to_string() })
    }

    pub fn methods(&self, default: &[Method]) -> Result<Vec<Method>> {
        match &self.method {
            None => Ok(default.to_vec()),
            Some(list) => list.iter().map(|m| m.trim().parse::<Method>().map_err(CliError::from)).collect(),
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::Usage("--seed is required".into()))
    }

    pub fn response_or_default(&self) -> String {
        self.response.clone().unwrap_or_else(|| "y".into())
    }

    pub fn lambda2_grid_or_default(&self) -> Vec<f64> {
        self.lambda2_grid.clone().unwrap_or_else(|| DEFAULT_RIDGE_GRID.to_vec())
    }
}

/// Knobs of the bootstrap selection pipeline, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub penalty: PenaltyArg,
    pub bootstrap: BootstrapArg,
    pub replicates: usize,
    pub folds: usize,
    pub gamma: f64,
    pub lambda2_grid: Vec<f64>,
    pub c: f64,
    pub max_steps: Option<usize>,
}

impl PipelineConfig {
    pub fn resolve(o: &Options, penalty: PenaltyArg, bootstrap: BootstrapArg) -> Result<Self> {
        let cfg = PipelineConfig {
            penalty: o.penalty.unwrap_or(penalty),
            bootstrap: o.bootstrap.unwrap_or(bootstrap),
            replicates: o.replicates.unwrap_or(100),
            folds: o.folds.unwrap_or(10),
            gamma: o.gamma.unwrap_or(1.0),
            lambda2_grid: o.lambda2_grid_or_default(),
            c: o.c.unwrap_or(1.0),
            max_steps: o.max_steps,
        };
        if cfg.replicates == 0 {
            return Err(CliError::Usage("-B must be at least 1".into()));
        }
        if cfg.lambda2_grid.is_empty() || cfg.lambda2_grid.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
            return Err(CliError::Usage("--lambda2-grid needs positive finite values".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub data: PathBuf,
    pub response: String,
    pub method: Method,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub scenario: String,
    pub n: Vec<usize>,
    /// Predictor count at each `n`, recorded for the reader.
    #[serde(default)]
    pub p: Vec<usize>,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub data: PathBuf,
    pub response: String,
    pub dn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub response: String,
    pub dn: Option<usize>,
    pub methods: Vec<Method>,
    pub threshold: f64,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub file: String,
}

/// A resolved command, replayable on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Select(SelectConfig),
    Simulate(SimulateConfig),
    Screen(ScreenConfig),
    Classify(ClassifyConfig),
    Generate(GenerateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run: RunConfig,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn new(run: RunConfig, outputs: Vec<String>) -> Self {
        Manifest { tool: "wmfsel".into(), version: env!("CARGO_PKG_VERSION").into(), run, outputs }
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.into(), message: e.to_string() })
    }
}
