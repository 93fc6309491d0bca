use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbm_whittle::estimators::{Bounds, EstimatorConfig, DEFAULT_H_BOUNDS, DEFAULT_SIGMA_BOUNDS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "fbmw", version, about = "Hurst and scale estimation for noisy fractional Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate noisy observations and write them as CSV plus a metadata file.
    Simulate(Flags),
    /// Estimate H and σ from a CSV of observations.
    Estimate {
        input: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Monte Carlo study of the estimators against their limit laws.
    McStudy(Flags),
    /// Limit variances at given parameters.
    Variance {
        #[arg(long, value_enum, default_value_t = Regime::Optimal)]
        regime: Regime,
        #[command(flatten)]
        flags: Flags,
    },
    /// Tabulate the block-averaged spectral density.
    PsdTable {
        /// Number of equally spaced frequencies in (0, π].
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Unsmoothed increments, no or fast-vanishing noise.
    Fast,
    /// Two-step estimator under constant noise.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by all subcommands; every one may also come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Key-value file (`key = value`, keys named like the long flags).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Admissible Hurst interval `LO,HI`.
    #[arg(long, value_name = "LO,HI")]
    pub h_bounds: Option<String>,
    /// Admissible scale interval `LO,HI`.
    #[arg(long, value_name = "LO,HI")]
    pub sigma_bounds: Option<String>,
    #[arg(long)]
    pub delta_star: Option<f64>,
    #[arg(long)]
    pub grid_m: Option<usize>,
    #[arg(long)]
    pub pilot_only: bool,
    /// Force the pilot block size.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub n: usize,
    pub hurst: f64,
    pub sigma: f64,
    pub tau: f64,
}

/// Fully resolved settings of one invocation, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub model: ModelSettings,
    pub estimator: EstimatorConfig,
    pub replicates: usize,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

pub const DEFAULT_N: usize = 1 << 14;
pub const DEFAULT_REPLICATES: usize = 200;

const KEYS: &[&str] = &[
    "n",
    "hurst",
    "sigma",
    "tau",
    "seed",
    "replicates",
    "h-bounds",
    "sigma-bounds",
    "delta-star",
    "grid-m",
    "pilot-only",
    "k",
    "out",
    "format",
    "threads",
];

/// Parse `key = value` lines; `#` starts a comment. Underscores in keys are
/// read as dashes.
pub fn parse_config_file(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("{}:{}: unknown key `{key}`", path.display(), i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse `{value}` for {key}")))
}

pub fn parse_pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("{key} expects LO,HI, got `{value}`")))?;
    let pair = (parse_value(key, a.trim())?, parse_value(key, b.trim())?);
    if !(pair.0 < pair.1) {
        return Err(CliError::Config(format!("{key} needs LO < HI, got `{value}`")));
    }
    Ok(pair)
}

impl Flags {
    /// Flags override the config file, which overrides the defaults.
    pub fn resolve(&self, command: &str, input: Option<PathBuf>) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_config_file(&text, path)?
            }
            None => BTreeMap::new(),
        };
        fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key).map(|v| parse_value(key, v)).transpose(),
            }
        }
        let pair = |flag: &Option<String>, key: &str, default: (f64, f64)| -> Result<(f64, f64)> {
            match flag.as_ref().or(file.get(key)) {
                Some(v) => parse_pair(key, v),
                None => Ok(default),
            }
        };
        let format = match self.format {
            Some(f) => f,
            None => match file.get("format").map(String::as_str) {
                None if matches!(command, "simulate" | "psd-table") => Format::Csv,
                None | Some("json") => Format::Json,
                Some("csv") => Format::Csv,
                Some(other) => return Err(CliError::Config(format!("unknown format `{other}`"))),
            },
        };
        let pilot_only = self.pilot_only || pick::<bool>(None, &file, "pilot-only")?.unwrap_or(false);
        let tau = pick(self.tau, &file, "tau")?.unwrap_or(0.0);
        let seed = pick(self.seed, &file, "seed")?.unwrap_or(0);
        let (h_lo, h_hi) = pair(&self.h_bounds, "h-bounds", DEFAULT_H_BOUNDS)?;
        let (sigma_lo, sigma_hi) = pair(&self.sigma_bounds, "sigma-bounds", DEFAULT_SIGMA_BOUNDS)?;
        let estimator = EstimatorConfig {
            bounds: Bounds { h_lo, h_hi, sigma_lo, sigma_hi },
            tau,
            k: pick(self.k, &file, "k")?,
            delta_star: pick(self.delta_star, &file, "delta-star")?.unwrap_or(std::f64::consts::LN_2),
            grid_m: pick(self.grid_m, &file, "grid-m")?,
            seed,
            pilot_only,
        };
        estimator.bounds.validate()?;
        Ok(RunConfig {
            command: command.to_string(),
            model: ModelSettings {
                n: pick(self.n, &file, "n")?.unwrap_or(DEFAULT_N),
                hurst: pick(self.hurst, &file, "hurst")?.unwrap_or(0.3),
                sigma: pick(self.sigma, &file, "sigma")?.unwrap_or(1.0),
                tau,
            },
            estimator,
            replicates: pick(self.replicates, &file, "replicates")?.unwrap_or(DEFAULT_REPLICATES),
            seed,
            input,
            out: self.out.clone().or_else(|| file.get("out").map(PathBuf::from)),
            format,
            threads: pick(self.threads, &file, "threads")?,
        })
    }
}
