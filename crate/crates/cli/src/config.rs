//! Command-line flags, the JSON config file, and their resolution into a
//! validated run configuration (flags win over the file).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use conformal_core::{Epsilon, KernelSpec, KnnConfig, RidgeConfig, TeacherSchedule};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "conformal", version, about = "Conformal prediction experiments on CSV data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Classify,
    Regress,
    Online,
    Batch,
    Icp,
    BayesCompare,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transductive p-values, confidence and credibility for each test row
    Classify(Flags),
    /// Exact ridge regression confidence intervals for each test row
    Regress(Flags),
    /// On-line protocol over the data stream; writes the Err/Mult/Emp ledger
    Online(Flags),
    /// Train once, predict the test file without feedback; writes the ledger
    Batch(Flags),
    /// Inductive (split) conformal prediction
    Icp(Flags),
    /// Ridge confidence machine against Bayes intervals on synthetic data
    BayesCompare(Flags),
}

impl Command {
    pub fn parts(&self) -> (CommandKind, &Flags) {
        match self {
            Command::Classify(f) => (CommandKind::Classify, f),
            Command::Regress(f) => (CommandKind::Regress, f),
            Command::Online(f) => (CommandKind::Online, f),
            Command::Batch(f) => (CommandKind::Batch, f),
            Command::Icp(f) => (CommandKind::Icp, f),
            Command::BayesCompare(f) => (CommandKind::BayesCompare, f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Knn,
    Ridge,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// JSON file with any of the options below (kebab-case keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training (or stream) CSV: header row, features, label last
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test CSV, with or without the label column
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub measure: Option<MeasureKind>,
    /// Neighbours for the kNN measure
    #[arg(long)]
    pub k: Option<usize>,
    /// Ridge parameter
    #[arg(long = "ridge-a")]
    pub ridge_a: Option<f64>,
    /// linear, poly:DEGREE[:OFFSET] or rbf:GAMMA
    #[arg(long)]
    pub kernel: Option<String>,
    /// Comma-separated significance levels
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Smoothed p-values (random tie-breaking)
    #[arg(long)]
    pub smoothed: bool,
    /// Seed for tie-breaking, shuffling and synthetic data (default 0)
    #[arg(long)]
    pub seed: Option<u64>,
    /// immediate, lazy:Q, slow:D, batch:L or explicit:STEP/EXAMPLE,...
    #[arg(long)]
    pub teacher: Option<String>,
    /// Size of the proper training set for ICP
    #[arg(long = "split-m")]
    pub split_m: Option<usize>,
    /// Output file (output directory for bayes-compare)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Declared class alphabet, comma-separated, in order
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Prior precisions assumed by both predictors in bayes-compare
    #[arg(long = "a-assumed", value_delimiter = ',')]
    pub a_assumed: Option<Vec<f64>>,
    /// Shuffle the on-line stream with the seed before running
    #[arg(long)]
    pub shuffle: bool,
    /// Repetitions in bayes-compare
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub measure: Option<MeasureKind>,
    pub k: Option<usize>,
    pub ridge_a: Option<f64>,
    pub kernel: Option<String>,
    pub eps: Option<Vec<f64>>,
    pub smoothed: Option<bool>,
    pub seed: Option<u64>,
    pub teacher: Option<String>,
    pub split_m: Option<usize>,
    pub out: Option<PathBuf>,
    pub labels: Option<Vec<String>>,
    pub a_assumed: Option<Vec<f64>>,
    pub shuffle: Option<bool>,
    pub trials: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    Knn(KnnConfig),
    Ridge(RidgeConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub data: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub measure: MeasureSpec,
    pub eps: Vec<Epsilon>,
    pub smoothed: bool,
    pub seed: u64,
    pub teacher: TeacherSchedule,
    pub split_m: Option<usize>,
    pub out: Option<PathBuf>,
    pub labels: Option<Vec<String>>,
    pub a_assumed: Vec<f64>,
    pub shuffle: bool,
    pub trials: usize,
}

pub const DEFAULT_EPS: [f64; 3] = [0.2, 0.05, 0.01];

pub fn parse_kernel(s: &str) -> CliResult<KernelSpec> {
    let bad = || CliError::Usage(format!("unknown kernel '{s}' (linear, poly:D[:C], rbf:G)"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let spec = match parts.as_slice() {
        ["linear"] => KernelSpec::Linear,
        ["poly", d] => KernelSpec::Polynomial {
            degree: d.parse().map_err(|_| bad())?,
            offset: 1.0,
        },
        ["poly", d, c] => KernelSpec::Polynomial {
            degree: d.parse().map_err(|_| bad())?,
            offset: c.parse().map_err(|_| bad())?,
        },
        ["rbf", g] => KernelSpec::Rbf {
            gamma: g.parse().map_err(|_| bad())?,
        },
        _ => return Err(bad()),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

impl RunConfig {
    pub fn resolve(command: CommandKind, flags: &Flags) -> CliResult<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let pick = |flag: &Option<PathBuf>, f: &Option<PathBuf>| flag.clone().or_else(|| f.clone());

        let default_measure = match command {
            CommandKind::Regress | CommandKind::BayesCompare => MeasureKind::Ridge,
            _ => MeasureKind::Knn,
        };
        let measure_kind = flags.measure.or(file.measure).unwrap_or(default_measure);
        let kernel = match flags.kernel.as_ref().or(file.kernel.as_ref()) {
            Some(s) => parse_kernel(s)?,
            None => KernelSpec::Linear,
        };
        let measure = match measure_kind {
            MeasureKind::Knn => {
                let k = flags.k.or(file.k).unwrap_or(1);
                MeasureSpec::Knn(KnnConfig::new(k, kernel).map_err(|e| CliError::Usage(e.to_string()))?)
            }
            MeasureKind::Ridge => {
                let a = flags.ridge_a.or(file.ridge_a).unwrap_or(1.0);
                let cfg = match kernel {
                    KernelSpec::Linear => RidgeConfig::primal(a),
                    other => RidgeConfig::kernel(a, other),
                };
                MeasureSpec::Ridge(cfg.map_err(|e| CliError::Usage(e.to_string()))?)
            }
        };
        match (command, &measure) {
            (CommandKind::Classify, MeasureSpec::Ridge(_)) => {
                return Err(CliError::Usage("classify needs --measure knn".into()))
            }
            (CommandKind::Regress, MeasureSpec::Knn(_)) => {
                return Err(CliError::Usage("regress needs --measure ridge".into()))
            }
            _ => {}
        }

        let eps = flags
            .eps
            .clone()
            .or(file.eps)
            .unwrap_or_else(|| DEFAULT_EPS.to_vec())
            .into_iter()
            .map(|e| Epsilon::new(e).map_err(|_| CliError::Usage(format!("--eps {e} is not in (0, 1)"))))
            .collect::<CliResult<Vec<_>>>()?;
        if eps.is_empty() {
            return Err(CliError::Usage("--eps needs at least one level".into()));
        }

        let teacher = match flags.teacher.as_ref().or(file.teacher.as_ref()) {
            Some(s) => s.parse().map_err(|e: conformal_core::Error| CliError::Usage(e.to_string()))?,
            None => TeacherSchedule::Immediate,
        };
        let a_assumed = flags
            .a_assumed
            .clone()
            .or(file.a_assumed)
            .unwrap_or_else(|| vec![1.0, 1000.0, 10000.0]);
        if a_assumed.is_empty() || a_assumed.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(CliError::Usage("--a-assumed values must be positive".into()));
        }
        let trials = flags.trials.or(file.trials).unwrap_or(10);
        if trials == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }

        let config = RunConfig {
            command,
            data: pick(&flags.data, &file.data),
            test: pick(&flags.test, &file.test),
            measure,
            eps,
            smoothed: flags.smoothed || file.smoothed.unwrap_or(false),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            teacher,
            split_m: flags.split_m.or(file.split_m),
            out: pick(&flags.out, &file.out),
            labels: flags.labels.clone().or(file.labels),
            a_assumed,
            shuffle: flags.shuffle || file.shuffle.unwrap_or(false),
            trials,
        };
        config.check_files()?;
        Ok(config)
    }

    fn check_files(&self) -> CliResult<()> {
        let needs_data = self.command != CommandKind::BayesCompare;
        let needs_test = matches!(
            self.command,
            CommandKind::Classify | CommandKind::Regress | CommandKind::Batch | CommandKind::Icp
        );
        if needs_data && self.data.is_none() {
            return Err(CliError::Usage("--data is required".into()));
        }
        if needs_test && self.test.is_none() {
            return Err(CliError::Usage("--test is required".into()));
        }
        if self.command == CommandKind::BayesCompare && self.out.is_none() {
            return Err(CliError::Usage("bayes-compare needs --out DIR".into()));
        }
        for p in [&self.data, &self.test].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Data(format!("{}: no such file", p.display())));
            }
        }
        Ok(())
    }
}
