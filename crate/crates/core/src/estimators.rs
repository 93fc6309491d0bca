//! Pilot pre-averaged Whittle estimator and the two-step rate-adaptive
//! estimator built on it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{fast_regime_report, gamma_star, variance_optimal_regime};
use crate::error::{Error, Result};
use crate::periodogram::periodogram;
use crate::spectral::BlockSize;
use crate::synthesis::{preaverage, stream_rng, ObservationSeries, Stream};
use crate::whittle::{ContrastSpec, Whittle, WhittleFit};

/// Smallest increment series the estimators accept.
pub const MIN_INCREMENTS: usize = 64;

pub const DEFAULT_H_BOUNDS: (f64, f64) = (0.05, 0.95);
pub const DEFAULT_SIGMA_BOUNDS: (f64, f64) = (0.01, 100.0);

/// Admissible parameter rectangle `[H₋, H₊] × [σ₋, σ₊]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub h_lo: f64,
    pub h_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            h_lo: DEFAULT_H_BOUNDS.0,
            h_hi: DEFAULT_H_BOUNDS.1,
            sigma_lo: DEFAULT_SIGMA_BOUNDS.0,
            sigma_hi: DEFAULT_SIGMA_BOUNDS.1,
        }
    }
}

impl Bounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_lo > 0.0 && self.h_lo < self.h_hi && self.h_hi < 1.0) {
            return Err(Error::Parameter(format!(
                "Hurst bounds [{}, {}] must satisfy 0 < lo < hi < 1",
                self.h_lo, self.h_hi
            )));
        }
        if !(self.sigma_lo > 0.0 && self.sigma_lo < self.sigma_hi && self.sigma_hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale bounds [{}, {}] must satisfy 0 < lo < hi",
                self.sigma_lo, self.sigma_hi
            )));
        }
        Ok(())
    }

    fn contrast_spec(&self, k: usize, n: usize, tau: f64) -> ContrastSpec {
        ContrastSpec {
            h_lo: self.h_lo,
            h_hi: self.h_hi,
            sigma_lo: self.sigma_lo,
            sigma_hi: self.sigma_hi,
            k,
            n,
            tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotConfig {
    /// `bounds.h_hi` is the `H₊` driving the block schedule.
    pub bounds: Bounds,
    pub tau: f64,
    /// Block size override.
    pub k: Option<usize>,
}

impl PilotConfig {
    pub fn h_plus(&self) -> f64 {
        self.bounds.h_hi
    }

    pub fn block_size(&self, n: usize) -> usize {
        self.k.unwrap_or_else(|| pilot_block_size(n, self.h_plus()))
    }
}

/// `⌈n^{2H₊/(2H₊+1)}⌉`.
pub fn pilot_block_size(n: usize, h_plus: f64) -> usize {
    ((n as f64).powf(2.0 * h_plus / (2.0 * h_plus + 1.0)).ceil() as usize).max(1)
}

/// `⌈n^{1/(4H₊+2)} / log n⌉`.
pub fn default_grid_m(n: usize, h_plus: f64) -> usize {
    let n = n as f64;
    ((n.powf(1.0 / (4.0 * h_plus + 2.0)) / n.ln()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStepConfig {
    pub bounds: Bounds,
    pub tau: f64,
    pub delta_star: f64,
    /// Grid resolution `m`.
    pub m: usize,
    /// Upward offset `q = δ*/log n`.
    pub q: f64,
    /// Seed of the sub-stream the auxiliary uniform is drawn from.
    pub seed: u64,
}

impl TwoStepConfig {
    /// Configuration for a sample with `n` sampling intervals; `m` defaults to
    /// [`default_grid_m`].
    pub fn for_sample(n: usize, bounds: Bounds, tau: f64, delta_star: f64, m: Option<usize>, seed: u64) -> Result<Self> {
        bounds.validate()?;
        if !(delta_star > 0.0 && delta_star.is_finite()) {
            return Err(Error::Parameter(format!("delta_star = {delta_star} must be positive")));
        }
        if n < 3 {
            return Err(Error::Parameter(format!("n = {n} is too small")));
        }
        let m = m.unwrap_or_else(|| default_grid_m(n, bounds.h_hi));
        if m == 0 {
            return Err(Error::Parameter("grid resolution m must be positive".into()));
        }
        Ok(TwoStepConfig { bounds, tau, delta_star, m, q: delta_star / (n as f64).ln(), seed })
    }

    /// The auxiliary uniform on `[0, 1)`.
    pub fn draw_u(&self) -> f64 {
        stream_rng(self.seed, Stream::GridOffset).gen::<f64>()
    }

    /// Messages for a grid resolution that is not small against `log n` or
    /// not large against the pilot rate `n^{1/(4H₊+2)}`.
    pub fn warnings(&self, n: usize) -> Vec<String> {
        let ln = (n as f64).ln();
        let rate = (n as f64).powf(1.0 / (4.0 * self.bounds.h_hi + 2.0));
        let mut out = Vec::new();
        if ln / self.m as f64 > 1.0 {
            out.push(format!("grid resolution m = {} is not large against log n = {ln:.2}", self.m));
        }
        if rate / (self.m as f64) < 1.0 {
            out.push(format!("grid resolution m = {} is not small against the pilot rate {rate:.2}", self.m));
        }
        out
    }
}

/// `H₋ + î/m (H₊ - H₋)` with `î = ⌈m (h - H₋ + q)/(H₊ - H₋) + u⌉`, clamped to
/// `[H₋, H₊]`. The flag reports whether clamping changed the value.
pub fn grid_round_flagged(h_pilot: f64, cfg: &TwoStepConfig, u: f64) -> (f64, bool) {
    let (lo, hi) = (cfg.bounds.h_lo, cfg.bounds.h_hi);
    let m = cfg.m as f64;
    let i = (m * (h_pilot - lo + cfg.q) / (hi - lo) + u).ceil();
    let h = lo + i / m * (hi - lo);
    let clamped = h.clamp(lo, hi);
    (clamped, clamped != h)
}

pub fn grid_round(h_pilot: f64, cfg: &TwoStepConfig, u: f64) -> f64 {
    grid_round_flagged(h_pilot, cfg, u).0
}

/// `⌊n^{2h/(2h+1)}⌋`.
pub fn optimal_block_size(n: usize, h: f64) -> usize {
    (n as f64).powf(2.0 * h / (2.0 * h + 1.0)).floor() as usize
}

/// Whittle fit of the series pre-averaged with block size `k`, over the
/// H range `[bounds.h_lo, h_hi]` and the ν rectangle of the full `bounds`.
pub fn fit_with_block(z: &ObservationSeries, k: usize, bounds: &Bounds, h_hi: f64, tau: f64) -> Result<(WhittleFit, usize)> {
    let n = z.n();
    let y = preaverage(z, k)?;
    if y.len() < MIN_INCREMENTS {
        return Err(Error::SampleTooSmall(format!(
            "block size {k} leaves {} increments, fewer than {MIN_INCREMENTS}",
            y.len()
        )));
    }
    let pg = periodogram(&y)?;
    let full = bounds.contrast_spec(k, n, tau);
    let (nu_lo, nu_hi) = full.nu_bounds();
    let spec = ContrastSpec { h_hi, ..full };
    let fit = Whittle::new(spec, &pg)?.minimize_in(nu_lo, nu_hi)?;
    Ok((fit, y.len()))
}

/// Pre-average with the pilot block size and minimise the contrast over the
/// full rectangle.
pub fn pilot_estimate(z: &ObservationSeries, cfg: &PilotConfig) -> Result<WhittleFit> {
    Ok(pilot_fit(z, cfg)?.fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageFit {
    pub fit: WhittleFit,
    pub k: usize,
    /// Length of the increment series.
    pub len: usize,
}

pub fn pilot_fit(z: &ObservationSeries, cfg: &PilotConfig) -> Result<StageFit> {
    cfg.bounds.validate()?;
    let k = cfg.block_size(z.n());
    let (fit, len) = fit_with_block(z, k, &cfg.bounds, cfg.bounds.h_hi, cfg.tau)?;
    Ok(StageFit { fit, k, len })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSd {
    pub h: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub grid_offset: u64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub pilot: StageFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_grid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_grid_clamped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_opt: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal: Option<StageFit>,
    /// Standard deviations of `Ĥ` and `σ̂` at this `n` implied by the limit law
    /// of the final stage, evaluated at the estimates.
    pub asymptotic_sd: Option<AsymptoticSd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    pub warnings: Vec<String>,
}

impl EstimateReport {
    /// Final estimate: the two-step fit when present, the pilot otherwise.
    pub fn final_fit(&self) -> &WhittleFit {
        self.optimal.as_ref().map_or(&self.pilot.fit, |s| &s.fit)
    }
}

/// Asymptotic SDs of the pilot at this sample: `√N(Ĥ - H)` and
/// `√N/log N (σ̂ - σ)`.
pub fn pilot_asymptotic_sd(fit: &WhittleFit, k: usize, len: usize) -> Result<AsymptoticSd> {
    let block = if k == 1 { BlockSize::Finite(1) } else { BlockSize::Infinite };
    let r = fast_regime_report(fit.h_hat, fit.sigma_hat, block)?;
    let len = len as f64;
    let h = r.sd_h() / len.sqrt();
    Ok(AsymptoticSd { h, sigma: r.sigma_multiplier * h * len.ln() })
}

/// Second stage on the same series: grid rounding, re-pre-averaging with
/// `k_opt` and minimisation over `[H₋, ĥ]`.
pub fn optimal_estimate(z: &ObservationSeries, pilot: &StageFit, cfg: &TwoStepConfig) -> Result<EstimateReport> {
    cfg.bounds.validate()?;
    let n = z.n();
    let u = cfg.draw_u();
    let (h_grid, clamped) = grid_round_flagged(pilot.fit.h_hat, cfg, u);
    let k_opt = optimal_block_size(n, h_grid);
    if k_opt < 2 {
        return Err(Error::SampleTooSmall(format!("optimal block size {k_opt} is below 2")));
    }
    if 2 * k_opt > n {
        return Err(Error::SampleTooSmall(format!("optimal block size {k_opt} exceeds n/2 for n = {n}")));
    }
    let (fit, len) = fit_with_block(z, k_opt, &cfg.bounds, h_grid, cfg.tau)?;

    let gs = gamma_star(cfg.delta_star, fit.h_hat);
    let asymptotic_sd = variance_optimal_regime(fit.h_hat, fit.sigma_hat, cfg.tau, gs).ok().map(|r| {
        let nf = n as f64;
        let h = r.sd_h() / nf.powf(1.0 / (4.0 * fit.h_hat + 2.0));
        AsymptoticSd { h, sigma: r.sigma_multiplier * h * nf.ln() }
    });
    let mut warnings = cfg.warnings(n);
    if clamped {
        warnings.push(format!("grid point clamped to [{}, {}]", cfg.bounds.h_lo, cfg.bounds.h_hi));
    }
    if fit.boundary_hit.h_hi {
        warnings.push("two-step estimate on the upper edge of its Hurst range".into());
    }
    Ok(EstimateReport {
        pilot: *pilot,
        h_grid: Some(h_grid),
        h_grid_clamped: Some(clamped),
        k_opt: Some(k_opt),
        optimal: Some(StageFit { fit, k: k_opt, len }),
        asymptotic_sd,
        seeds: Some(Seeds { grid_offset: cfg.seed, u }),
        warnings,
    })
}

/// Everything the estimators need besides the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub bounds: Bounds,
    pub tau: f64,
    pub k: Option<usize>,
    pub delta_star: f64,
    pub grid_m: Option<usize>,
    pub seed: u64,
    pub pilot_only: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            bounds: Bounds::default(),
            tau: 0.0,
            k: None,
            delta_star: std::f64::consts::LN_2,
            grid_m: None,
            seed: 0,
            pilot_only: false,
        }
    }
}

impl EstimatorConfig {
    pub fn pilot(&self) -> PilotConfig {
        PilotConfig { bounds: self.bounds, tau: self.tau, k: self.k }
    }

    pub fn two_step(&self, n: usize) -> Result<TwoStepConfig> {
        TwoStepConfig::for_sample(n, self.bounds, self.tau, self.delta_star, self.grid_m, self.seed)
    }
}

/// Pilot and, unless `pilot_only`, the two-step estimate.
pub fn estimate(z: &ObservationSeries, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    let pilot = pilot_fit(z, &cfg.pilot())?;
    if cfg.pilot_only {
        return Ok(EstimateReport {
            pilot,
            h_grid: None,
            h_grid_clamped: None,
            k_opt: None,
            optimal: None,
            asymptotic_sd: pilot_asymptotic_sd(&pilot.fit, pilot.k, pilot.len).ok(),
            seeds: None,
            warnings: Vec::new(),
        });
    }
    optimal_estimate(z, &pilot, &cfg.two_step(z.n())?)
}
