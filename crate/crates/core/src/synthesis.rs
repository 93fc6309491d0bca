//! Simulation of `Z_i = σ W^H_{i/n} + τ ξ_i`, `i = 0..=n`, and the derived
//! increment series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Independent random sub-streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Path = 1,
    Noise = 2,
    GridOffset = 3,
}

/// Generator for the named sub-stream of `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of replicate `index` in a study with master seed `master`; depends on
/// nothing else, so replicates can run in any order or thread.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hurst: f64,
    pub sigma: f64,
    pub tau: f64,
    /// Number of sampling intervals; there are `n + 1` observations.
    pub n: usize,
}

impl ModelParams {
    pub fn new(hurst: f64, sigma: f64, tau: f64, n: usize) -> Result<Self> {
        let p = ModelParams { hurst, sigma, tau, n };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::Parameter(format!("hurst = {} outside (0, 1)", self.hurst)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma = {} must be positive", self.sigma)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau = {} must be nonnegative", self.tau)));
        }
        if self.n < 2 {
            return Err(Error::Parameter(format!("n = {} must be at least 2", self.n)));
        }
        Ok(())
    }
}

/// Noisy observations `Z_0..Z_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    pub values: Vec<f64>,
    pub params: Option<ModelParams>,
    pub seed: Option<u64>,
}

impl ObservationSeries {
    /// Wrap observed data with no model metadata.
    pub fn from_values(values: Vec<f64>) -> Self {
        ObservationSeries { values, params: None, seed: None }
    }

    /// Number of sampling intervals.
    pub fn n(&self) -> usize {
        self.values.len().saturating_sub(1)
    }
}

/// Increments `Y_1..Y_N` of block means of `block_size` consecutive observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    pub values: Vec<f64>,
    pub block_size: usize,
    /// Number of observations the series was built from.
    pub n_source: usize,
}

impl IncrementSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Autocovariance of unit-spaced fractional Gaussian noise at integer `lag`.
pub fn fgn_autocovariance(hurst: f64, lag: usize) -> f64 {
    let t = lag as f64;
    let e = 2.0 * hurst;
    0.5 * ((t + 1.0).powf(e) + (t - 1.0).abs().powf(e) - 2.0 * t.powf(e))
}

const EMBEDDING_TOLERANCE: f64 = 1e-10;

/// Square roots of `λ_j / m` for the circulant embedding of the first `n`
/// autocovariances, doubling the embedding until it is nonnegative definite.
fn embedding_scales(hurst: f64, n: usize, planner: &mut FftPlanner<f64>) -> Result<Vec<f64>> {
    let mut half = n.max(1);
    for _ in 0..4 {
        let m = 2 * half;
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|j| Complex::new(fgn_autocovariance(hurst, j.min(m - j)), 0.0))
            .collect();
        planner.plan_fft_forward(m).process(&mut buf);
        let scale = buf.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        if buf.iter().all(|c| c.re >= -EMBEDDING_TOLERANCE * scale) {
            return Ok(buf.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect());
        }
        half *= 2;
    }
    Err(Error::Numerical(format!(
        "circulant embedding for H = {hurst}, n = {n} is not nonnegative definite"
    )))
}

fn fgn_from_rng(hurst: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut planner = FftPlanner::new();
    let scales = embedding_scales(hurst, n, &mut planner)?;
    let m = scales.len();
    let mut buf: Vec<Complex<f64>> = scales
        .iter()
        .map(|s| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(s * re, s * im)
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let step = (n as f64).powf(-hurst);
    Ok(buf[..n].iter().map(|c| c.re * step).collect())
}

/// Increments `W^H_{i/n} - W^H_{(i-1)/n}`, `i = 1..=n`, of a standard fBm,
/// generated exactly by circulant embedding.
pub fn simulate_fgn(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Parameter(format!("hurst = {hurst} outside (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    fgn_from_rng(hurst, n, &mut stream_rng(seed, Stream::Path))
}

/// One draw of the observation model.
pub fn simulate_observations(params: &ModelParams, seed: u64) -> Result<ObservationSeries> {
    params.validate()?;
    let n = params.n;
    let fgn = fgn_from_rng(params.hurst, n, &mut stream_rng(seed, Stream::Path))?;
    let mut noise = stream_rng(seed, Stream::Noise);
    let mut values = Vec::with_capacity(n + 1);
    let mut path = 0.0;
    let xi: f64 = StandardNormal.sample(&mut noise);
    values.push(params.tau * xi);
    for g in fgn {
        path += g;
        let xi: f64 = StandardNormal.sample(&mut noise);
        values.push(params.sigma * path + params.tau * xi);
    }
    Ok(ObservationSeries { values, params: Some(*params), seed: Some(seed) })
}

/// Means of consecutive blocks of `k` observations; a trailing partial block
/// is dropped.
pub fn block_means(values: &[f64], k: usize) -> Vec<f64> {
    values.chunks_exact(k).map(|c| c.iter().sum::<f64>() / k as f64).collect()
}

/// Pre-average with block size `k` and difference.
pub fn preaverage(series: &ObservationSeries, k: usize) -> Result<IncrementSeries> {
    let n = series.n();
    if k == 0 || (k > 1 && 2 * k > n) {
        return Err(Error::Parameter(format!("block size {k} outside [1, n/2] for n = {n}")));
    }
    let means = block_means(&series.values, k);
    if means.len() < 2 {
        return Err(Error::SampleTooSmall(format!("{} observations give fewer than two blocks", series.values.len())));
    }
    Ok(IncrementSeries {
        values: means.windows(2).map(|w| w[1] - w[0]).collect(),
        block_size: k,
        n_source: series.values.len(),
    })
}
