//! Monte Carlo studies: simulate, estimate, and compare the rate-scaled
//! errors with their limit laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{fast_regime_report, gamma_star, variance_optimal_regime, VarianceReport};
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorConfig};
use crate::spectral::BlockSize;
use crate::synthesis::{replicate_seed, simulate_observations, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub params: ModelParams,
    pub estimator: EstimatorConfig,
    pub replicates: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub index: usize,
    pub seed: u64,
    pub pilot_h: Option<f64>,
    pub pilot_sigma: Option<f64>,
    pub pilot_len: Option<usize>,
    pub h_grid: Option<f64>,
    pub k_opt: Option<usize>,
    pub h_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub replicates: usize,
    pub failures: usize,
    /// Rate multiplying `Ĥ - H₀`; the σ error is scaled by `h_rate / log n`
    /// (`log N` for the pilot).
    pub h_rate: f64,
    pub sigma_rate: f64,
    pub mean_h_error: f64,
    pub sd_h_error: f64,
    pub mean_sigma_error: f64,
    pub sd_sigma_error: f64,
    /// Correlation between the scaled σ error and `σ₀` times the scaled H error.
    pub error_correlation: f64,
    pub median_abs_h_error: f64,
    pub theory: Option<VarianceReport>,
    /// Fraction of replicates with `|Ĥ - H₀| ≤ 1.96 · sd_h / h_rate`.
    pub coverage_h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub rows: Vec<ReplicateRow>,
    pub summary: McSummary,
}

fn run_replicate(cfg: &McConfig, index: usize) -> ReplicateRow {
    let seed = replicate_seed(cfg.master_seed, index as u64);
    let mut row = ReplicateRow {
        index,
        seed,
        pilot_h: None,
        pilot_sigma: None,
        pilot_len: None,
        h_grid: None,
        k_opt: None,
        h_hat: None,
        sigma_hat: None,
        error: None,
    };
    let result = simulate_observations(&cfg.params, seed)
        .and_then(|z| estimate(&z, &EstimatorConfig { seed, ..cfg.estimator }));
    match result {
        Ok(r) => {
            row.pilot_h = Some(r.pilot.fit.h_hat);
            row.pilot_sigma = Some(r.pilot.fit.sigma_hat);
            row.pilot_len = Some(r.pilot.len);
            row.h_grid = r.h_grid;
            row.k_opt = r.k_opt;
            let f = r.final_fit();
            row.h_hat = Some(f.h_hat);
            row.sigma_hat = Some(f.sigma_hat);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    cov / (sa * sb)
}

/// Limit law of the configured estimator at the true parameters.
pub fn theoretical_law(cfg: &McConfig) -> Result<VarianceReport> {
    let p = &cfg.params;
    if cfg.estimator.pilot_only {
        let block = if cfg.estimator.k == Some(1) { BlockSize::Finite(1) } else { BlockSize::Infinite };
        fast_regime_report(p.hurst, p.sigma, block)
    } else {
        variance_optimal_regime(p.hurst, p.sigma, p.tau, gamma_star(cfg.estimator.delta_star, p.hurst))
    }
}

fn summarize(cfg: &McConfig, rows: &[ReplicateRow]) -> Result<McSummary> {
    let p = &cfg.params;
    let ok: Vec<&ReplicateRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    if ok.len() < 2 {
        return Err(Error::Numerical(format!("only {} of {} replicates succeeded", ok.len(), rows.len())));
    }
    let nf = p.n as f64;
    let (h_rate, sigma_rate) = if cfg.estimator.pilot_only {
        let len = ok[0].pilot_len.unwrap_or(p.n) as f64;
        (len.sqrt(), len.sqrt() / len.ln())
    } else {
        let r = nf.powf(1.0 / (4.0 * p.hurst + 2.0));
        (r, r / nf.ln())
    };
    let eh: Vec<f64> = ok.iter().map(|r| h_rate * (r.h_hat.unwrap() - p.hurst)).collect();
    let es: Vec<f64> = ok.iter().map(|r| sigma_rate * (r.sigma_hat.unwrap() - p.sigma)).collect();
    let (mean_h_error, sd_h_error) = mean_sd(&eh);
    let (mean_sigma_error, sd_sigma_error) = mean_sd(&es);
    let scaled_h: Vec<f64> = eh.iter().map(|e| p.sigma * e).collect();
    let theory = theoretical_law(cfg).ok();
    let coverage_h = theory.map(|t| {
        let half = 1.96 * t.sd_h();
        eh.iter().filter(|e| e.abs() <= half).count() as f64 / eh.len() as f64
    });
    Ok(McSummary {
        replicates: rows.len(),
        failures: rows.len() - ok.len(),
        h_rate,
        sigma_rate,
        mean_h_error,
        sd_h_error,
        mean_sigma_error,
        sd_sigma_error,
        error_correlation: correlation(&es, &scaled_h),
        median_abs_h_error: median(&eh.iter().map(|e| e.abs() / h_rate).collect::<Vec<_>>()),
        theory,
        coverage_h,
    })
}

/// Run all replicates in parallel; rows come back in replicate order and the
/// summary is computed sequentially, so the result does not depend on the
/// number of threads.
pub fn run_study(cfg: &McConfig) -> Result<McReport> {
    if cfg.replicates < 2 {
        return Err(Error::Parameter(format!("need at least 2 replicates, got {}", cfg.replicates)));
    }
    cfg.params.validate()?;
    let work = || (0..cfg.replicates).into_par_iter().map(|i| run_replicate(cfg, i)).collect::<Vec<_>>();
    let rows = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let summary = summarize(cfg, &rows)?;
    Ok(McReport { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Bounds;

    #[test]
    fn summary_statistics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((correlation(&a, &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-14);
        assert!((correlation(&a, &[-1.0, -2.0, -3.0, -4.0]) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn study_is_thread_count_independent() {
        let cfg = McConfig {
            params: ModelParams::new(0.3, 1.0, 0.0, 512).unwrap(),
            estimator: EstimatorConfig {
                bounds: Bounds { h_lo: 0.05, h_hi: 0.95, sigma_lo: 0.1, sigma_hi: 10.0 },
                k: Some(1),
                pilot_only: true,
                ..EstimatorConfig::default()
            },
            replicates: 6,
            master_seed: 5,
            threads: Some(1),
        };
        let a = run_study(&cfg).unwrap();
        let b = run_study(&McConfig { threads: Some(3), ..cfg }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.summary.failures, 0);
        assert!(run_study(&McConfig { replicates: 1, ..cfg }).is_err());
    }
}
