use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fbm_whittle::asymptotics::{fast_regime_report, gamma_star, variance_optimal_regime, VarianceReport};
use fbm_whittle::estimators::{estimate, EstimateReport, StageFit};
use fbm_whittle::mc::{run_study, McConfig, McSummary};
use fbm_whittle::spectral::{dpsd_dh, BlockSize, SpectralModel, DEFAULT_TRUNCATION};
use fbm_whittle::synthesis::{simulate_observations, ModelParams, ObservationSeries, Stream};
use fbm_whittle::whittle::BoundaryHit;
use serde::Serialize;

use crate::config::{Format, Regime, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{csv_table, emit, read_series, series_csv, to_json, write_file};

fn model_params(cfg: &RunConfig) -> Result<ModelParams> {
    let m = &cfg.model;
    Ok(ModelParams::new(m.hurst, m.sigma, m.tau, m.n)?)
}

/// `data.csv` → `data.json`.
pub fn metadata_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

#[derive(Serialize)]
struct SimulationMeta {
    params: ModelParams,
    seed: u64,
    observations: usize,
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    let params = model_params(cfg)?;
    let out = cfg
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("simulate needs --out".into()))?;
    let z = simulate_observations(&params, cfg.seed)?;
    let meta = SimulationMeta { params, seed: cfg.seed, observations: z.values.len() };
    match cfg.format {
        Format::Csv => {
            write_file(out, &series_csv(cfg, &z.values)?)?;
            write_file(&metadata_path(out), &to_json(cfg, serde_json::json!({ "metadata": meta }))?)
        }
        Format::Json => write_file(out, &to_json(cfg, serde_json::json!({ "metadata": meta, "z": z.values }))?),
    }
}

#[derive(Serialize)]
struct FitOut {
    h: f64,
    sigma: f64,
    nu: f64,
    contrast: f64,
    k: usize,
    n_increments: usize,
    converged: bool,
    evaluations: usize,
    boundary_hit: BoundaryHit,
}

impl From<&StageFit> for FitOut {
    fn from(s: &StageFit) -> Self {
        FitOut {
            h: s.fit.h_hat,
            sigma: s.fit.sigma_hat,
            nu: s.fit.nu_hat,
            contrast: s.fit.contrast,
            k: s.k,
            n_increments: s.len,
            converged: s.fit.converged,
            evaluations: s.fit.evaluations,
            boundary_hit: s.fit.boundary_hit,
        }
    }
}

#[derive(Serialize)]
struct SeedsOut {
    master: u64,
    grid_offset_stream: u64,
    u: f64,
}

#[derive(Serialize)]
struct ReportOut {
    pilot: FitOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_grid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h_grid_clamped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_opt: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<FitOut>,
    asymptotic_sd: Option<fbm_whittle::estimators::AsymptoticSd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<SeedsOut>,
    warnings: Vec<String>,
}

fn report_out(cfg: &RunConfig, r: &EstimateReport) -> ReportOut {
    ReportOut {
        pilot: (&r.pilot).into(),
        h_grid: r.h_grid,
        h_grid_clamped: r.h_grid_clamped,
        k_opt: r.k_opt,
        optimal: r.optimal.as_ref().map(Into::into),
        asymptotic_sd: r.asymptotic_sd,
        seeds: r.seeds.map(|s| SeedsOut { master: cfg.seed, grid_offset_stream: Stream::GridOffset as u64, u: s.u }),
        warnings: r.warnings.clone(),
    }
}

pub fn estimate_file(cfg: &RunConfig) -> Result<()> {
    if cfg.format == Format::Csv {
        return Err(CliError::Config("estimate writes JSON only".into()));
    }
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Config("missing input file".into()))?;
    let values = read_series(input)?;
    if values.len() < 3 {
        return Err(CliError::Data(format!("{}: need at least 3 observations", input.display())));
    }
    let z = ObservationSeries::from_values(values);
    let report = estimate(&z, &cfg.estimator)?;
    emit(cfg.out.as_deref(), &to_json(cfg, serde_json::json!({ "report": report_out(cfg, &report) }))?)
}

#[derive(Serialize)]
struct McOut<'a> {
    summary: &'a McSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicates: Option<&'a [fbm_whittle::mc::ReplicateRow]>,
}

pub fn mc_study(cfg: &RunConfig) -> Result<()> {
    let mc = McConfig {
        params: model_params(cfg)?,
        estimator: cfg.estimator,
        replicates: cfg.replicates,
        master_seed: cfg.seed,
        threads: cfg.threads,
    };
    let report = run_study(&mc)?;
    match &cfg.out {
        Some(prefix) => {
            write_file(&prefix.with_extension("csv"), &csv_table(cfg, &report.rows)?)?;
            write_file(
                &prefix.with_extension("json"),
                &to_json(cfg, McOut { summary: &report.summary, replicates: None })?,
            )
        }
        None => match cfg.format {
            Format::Csv => emit(None, &csv_table(cfg, &report.rows)?),
            Format::Json => emit(None, &to_json(cfg, McOut { summary: &report.summary, replicates: Some(&report.rows) })?),
        },
    }
}

#[derive(Serialize)]
struct VarianceOut {
    regime: Regime,
    variance: VarianceReport,
    /// Standard deviations of `Ĥ` and `σ̂` at the configured `n`.
    sd_at_n: fbm_whittle::estimators::AsymptoticSd,
}

pub fn variance(cfg: &RunConfig, regime: Regime) -> Result<()> {
    let m = &cfg.model;
    let nf = m.n as f64;
    let (report, rate) = match regime {
        Regime::Fast => {
            let block = BlockSize::Finite(cfg.estimator.k.unwrap_or(1));
            (fast_regime_report(m.hurst, m.sigma, block)?, nf.sqrt())
        }
        Regime::Optimal => {
            let g = gamma_star(cfg.estimator.delta_star, m.hurst);
            (variance_optimal_regime(m.hurst, m.sigma, m.tau, g)?, nf.powf(1.0 / (4.0 * m.hurst + 2.0)))
        }
    };
    let h = report.sd_h() / rate;
    let sd_at_n = fbm_whittle::estimators::AsymptoticSd { h, sigma: report.sigma_multiplier * h * nf.ln() };
    emit(cfg.out.as_deref(), &to_json(cfg, VarianceOut { regime, variance: report, sd_at_n })?)
}

#[derive(Serialize)]
struct PsdRow {
    lambda: f64,
    f: f64,
    df_dh: f64,
}

/// `f_{H,k}` (or `f_{H,∞}` without `--k`) and its H-derivative on `(0, π]`.
pub fn psd_table(cfg: &RunConfig, points: usize) -> Result<()> {
    if points == 0 {
        return Err(CliError::Config("--points must be positive".into()));
    }
    let block = cfg.estimator.k.map_or(BlockSize::Infinite, BlockSize::Finite);
    let model = SpectralModel::new(cfg.model.hurst, block)?;
    let rows = (1..=points)
        .map(|i| {
            let lambda = PI * i as f64 / points as f64;
            Ok(PsdRow {
                lambda,
                f: model.eval(lambda)?,
                df_dh: dpsd_dh(cfg.model.hurst, block, lambda, 1, DEFAULT_TRUNCATION)?,
            })
        })
        .collect::<std::result::Result<Vec<_>, fbm_whittle::Error>>()?;
    let text = match cfg.format {
        Format::Csv => csv_table(cfg, &rows)?,
        Format::Json => to_json(cfg, serde_json::json!({ "block": block, "rows": rows }))?,
    };
    emit(cfg.out.as_deref(), &text)
}
