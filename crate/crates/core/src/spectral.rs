//! Spectral densities of pre-averaged fractional Gaussian noise.
//!
//! For a block size `k` the density of the increments of `k`-point block
//! means of a unit-spaced fBm path is
//!
//! ```text
//! f_{H,k}(λ) = Γ(2H+1) sin(πH) Σ_j (1 - cos λ)² / (k² sin²(λ/2k + πj/k)) |λ + 2πj|^{-1-2H}
//! ```
//!
//! and its limit as `k → ∞` is
//!
//! ```text
//! f_{H,∞}(λ) = 4 Γ(2H+1) sin(πH) (1 - cos λ)² Σ_j |λ + 2πj|^{-3-2H}.
//! ```
//!
//! The `sin²` weight is `k`-periodic in `j`, so the series is regrouped by
//! residue `r = j mod k`. Each residue contributes two one-sided alias sums
//! `Σ_{m≥0} (a + 2πk m)^{-s}` which are summed explicitly for the first
//! `truncation` terms and closed with an Euler–Maclaurin tail (integral,
//! boundary and six Bernoulli corrections). With the default truncation the
//! relative error is below 1e-13 for every `H ∈ (0, 1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dual::{Dual2, Scalar};
use crate::error::{Error, Result};

/// Explicit alias terms per residue before the tail correction kicks in.
pub const DEFAULT_TRUNCATION: usize = 8;

/// Smallest |λ| at which a density is evaluated.
pub const LAMBDA_FLOOR: f64 = 1e-12;

// B_{2i} / (2i)! for i = 1..=6
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// Block size of the pre-averaging, or the continuous-average limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockSize {
    Finite(usize),
    Infinite,
}

/// Evaluator for `f_{H,k}` or `f_{H,∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub hurst: f64,
    pub block: BlockSize,
    /// Explicit alias terms per residue and side.
    pub truncation: usize,
    /// Close the alias sums with the Euler–Maclaurin tail.
    pub tail_correction: bool,
}

/// `2(1 - cos λ)`, the density of the increments of white noise.
pub fn noise_psd(lambda: f64) -> f64 {
    let s = (0.5 * lambda).sin();
    4.0 * s * s
}

fn check_lambda(lambda: f64) -> Result<f64> {
    let a = lambda.abs();
    if !a.is_finite() || a > PI * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("frequency {lambda} outside [-π, π]")));
    }
    if a < LAMBDA_FLOOR {
        return Err(Error::Domain(format!(
            "frequency {lambda} below the evaluation floor {LAMBDA_FLOOR:e}"
        )));
    }
    Ok(a.min(PI))
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("Hurst index {h} outside (0, 1)")))
    }
}

/// Γ(2H+1) sin(πH).
fn prefactor<S: Scalar>(h: S) -> S {
    (h * 2.0 + 1.0).gamma() * (h * PI).sin()
}

/// The bracket multiplying `x0^{-s}` in the Euler–Maclaurin tail of
/// `Σ_{m≥0} (x0 + c m)^{-s}` with `b = x0 / c`.
#[inline]
fn tail_bracket<S: Scalar>(s: S, b: f64) -> S {
    let inv_b = 1.0 / b;
    let inv_b2 = inv_b * inv_b;
    let mut acc = (s + (-1.0)).recip() * b + 0.5;
    let mut poch = s;
    let mut pw = inv_b;
    for (i, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        acc = acc + poch * (coef * pw);
        let j = 2.0 * i as f64 + 1.0;
        poch = poch * (s + j) * (s + (j + 1.0));
        pw *= inv_b2;
    }
    acc
}

/// `Σ_{m≥0} (a + c m)^{-s}` with `explicit` leading terms.
fn alias_sum<S: Scalar>(s: S, a: f64, c: f64, explicit: usize, tail: bool) -> S {
    let mut acc = S::cst(0.0);
    for m in 0..explicit {
        acc = acc + (s * -(a + c * m as f64).ln()).exp();
    }
    if tail {
        let x0 = a + c * explicit as f64;
        acc = acc + (s * -x0.ln()).exp() * tail_bracket(s, x0 / c);
    }
    acc
}

fn block_series<S: Scalar>(h: S, lambda: f64, block: BlockSize, explicit: usize, tail: bool) -> S {
    let one_minus_cos = 0.5 * noise_psd(lambda);
    let geom = one_minus_cos * one_minus_cos;
    match block {
        BlockSize::Finite(k) => {
            let s = h * 2.0 + 1.0;
            let kf = k as f64;
            let c = 2.0 * PI * kf;
            let mut acc = S::cst(0.0);
            for r in 0..k {
                let a = lambda + 2.0 * PI * r as f64;
                let sw = (a / (2.0 * kf)).sin();
                let w = 1.0 / (sw * sw);
                let pair = alias_sum(s, a, c, explicit, tail) + alias_sum(s, c - a, c, explicit, tail);
                acc = acc + pair * w;
            }
            prefactor(h) * acc * (geom / (kf * kf))
        }
        BlockSize::Infinite => {
            let s = h * 2.0 + 3.0;
            let c = 2.0 * PI;
            let pair = alias_sum(s, lambda, c, explicit, tail) + alias_sum(s, c - lambda, c, explicit, tail);
            prefactor(h) * pair * (4.0 * geom)
        }
    }
}

impl SpectralModel {
    pub fn new(hurst: f64, block: BlockSize) -> Result<Self> {
        check_hurst(hurst)?;
        if block == BlockSize::Finite(0) {
            return Err(Error::Parameter("block size must be at least 1".into()));
        }
        Ok(SpectralModel {
            hurst,
            block,
            truncation: DEFAULT_TRUNCATION,
            tail_correction: true,
        })
    }

    pub fn with_truncation(mut self, truncation: usize, tail_correction: bool) -> Self {
        self.truncation = truncation.max(1);
        self.tail_correction = tail_correction;
        self
    }

    pub fn at_hurst(&self, hurst: f64) -> Self {
        SpectralModel { hurst, ..*self }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        let a = check_lambda(lambda)?;
        Ok(block_series(self.hurst, a, self.block, self.truncation, self.tail_correction))
    }

    /// Value, first and second H-derivative.
    pub fn eval_derivs(&self, lambda: f64) -> Result<Dual2> {
        let a = check_lambda(lambda)?;
        Ok(block_series(
            Dual2::var(self.hurst),
            a,
            self.block,
            self.truncation,
            self.tail_correction,
        ))
    }
}

/// `f_{H,k}(λ)`.
pub fn psd_preaveraged(hurst: f64, k: usize, lambda: f64, truncation: usize) -> Result<f64> {
    SpectralModel::new(hurst, BlockSize::Finite(k))?
        .with_truncation(truncation, true)
        .eval(lambda)
}

/// `f_{H,∞}(λ)`.
pub fn psd_limit(hurst: f64, lambda: f64, truncation: usize) -> Result<f64> {
    SpectralModel::new(hurst, BlockSize::Infinite)?
        .with_truncation(truncation, true)
        .eval(lambda)
}

/// First or second derivative in `H` of `f_{H,k}` or `f_{H,∞}`.
pub fn dpsd_dh(hurst: f64, block: BlockSize, lambda: f64, order: u8, truncation: usize) -> Result<f64> {
    let d = SpectralModel::new(hurst, block)?
        .with_truncation(truncation, true)
        .eval_derivs(lambda)?;
    match order {
        1 => Ok(d.d1),
        2 => Ok(d.d2),
        _ => Err(Error::Parameter(format!("derivative order {order} not in {{1, 2}}"))),
    }
}

/// `g(λ) = ν² f_{H,k}(λ) + (τ²/k) l(λ)`, the density of the increments of the
/// pre-averaged noisy observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeDensity {
    pub spectral: SpectralModel,
    pub nu: f64,
    pub tau: f64,
    pub k: usize,
}

impl CompositeDensity {
    pub fn new(hurst: f64, k: usize, nu: f64, tau: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Parameter(format!("scale ν = {nu} must be nonnegative")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("noise level τ = {tau} must be nonnegative")));
        }
        if nu == 0.0 && tau == 0.0 {
            return Err(Error::Parameter("ν and τ cannot both vanish".into()));
        }
        Ok(CompositeDensity {
            spectral: SpectralModel::new(hurst, BlockSize::Finite(k))?,
            nu,
            tau,
            k,
        })
    }

    /// Noise weight `τ²/k`.
    pub fn noise_weight(&self) -> f64 {
        self.tau * self.tau / self.k as f64
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        let f = if self.nu > 0.0 { self.spectral.eval(lambda)? } else { check_lambda(lambda).map(|_| 0.0)? };
        Ok(self.nu * self.nu * f + self.noise_weight() * noise_psd(lambda))
    }
}

/// `composite_psd(cd, λ)`.
pub fn composite_psd(cd: &CompositeDensity, lambda: f64) -> Result<f64> {
    cd.eval(lambda)
}

struct Branch {
    weight: f64,
    x0_ln: f64,
    b: f64,
}

/// `f_{H,k}` on a fixed frequency grid with every H-independent quantity
/// (logarithms of the alias nodes, `sin²` weights) precomputed. Used by the
/// contrast minimisation, which evaluates the same grid at many `H`.
pub struct SpectralGrid {
    block: BlockSize,
    freqs: Vec<f64>,
    geom: Vec<f64>,
    // branches[i * per_freq .. (i + 1) * per_freq] belong to freqs[i]
    branches: Vec<Branch>,
    logs: Vec<f64>,
    per_freq: usize,
    explicit: usize,
}

impl SpectralGrid {
    pub fn new(block: BlockSize, freqs: &[f64]) -> Result<Self> {
        Self::with_truncation(block, freqs, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(block: BlockSize, freqs: &[f64], explicit: usize) -> Result<Self> {
        let explicit = explicit.max(1);
        let (k, c, per_freq) = match block {
            BlockSize::Finite(0) => return Err(Error::Parameter("block size must be at least 1".into())),
            BlockSize::Finite(k) => (k, 2.0 * PI * k as f64, 2 * k),
            BlockSize::Infinite => (1, 2.0 * PI, 2),
        };
        let mut geom = Vec::with_capacity(freqs.len());
        let mut branches = Vec::with_capacity(freqs.len() * per_freq);
        let mut logs = Vec::with_capacity(freqs.len() * per_freq * explicit);
        for &lambda in freqs {
            let lambda = check_lambda(lambda)?;
            let omc = 0.5 * noise_psd(lambda);
            match block {
                BlockSize::Finite(_) => geom.push(omc * omc / (k * k) as f64),
                BlockSize::Infinite => geom.push(4.0 * omc * omc),
            }
            for r in 0..k {
                let a = lambda + 2.0 * PI * r as f64;
                let weight = match block {
                    BlockSize::Finite(_) => {
                        let sw = (a / (2.0 * k as f64)).sin();
                        1.0 / (sw * sw)
                    }
                    BlockSize::Infinite => 1.0,
                };
                for start in [a, c - a] {
                    for m in 0..explicit {
                        logs.push((start + c * m as f64).ln());
                    }
                    let x0 = start + c * explicit as f64;
                    branches.push(Branch { weight, x0_ln: x0.ln(), b: x0 / c });
                }
            }
        }
        Ok(SpectralGrid {
            block,
            freqs: freqs.to_vec(),
            geom,
            branches,
            logs,
            per_freq,
            explicit,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn block(&self) -> BlockSize {
        self.block
    }

    /// Density values at every grid frequency, written into `out`.
    pub fn eval_into(&self, hurst: f64, out: &mut Vec<f64>) -> Result<()> {
        check_hurst(hurst)?;
        let s = match self.block {
            BlockSize::Finite(_) => 1.0 + 2.0 * hurst,
            BlockSize::Infinite => 3.0 + 2.0 * hurst,
        };
        let pre = prefactor(hurst);
        out.clear();
        for (i, &geom) in self.geom.iter().enumerate() {
            let branches = &self.branches[i * self.per_freq..(i + 1) * self.per_freq];
            let logs = &self.logs[i * self.per_freq * self.explicit..(i + 1) * self.per_freq * self.explicit];
            let mut acc = 0.0;
            for (br, lg) in branches.iter().zip(logs.chunks_exact(self.explicit)) {
                let mut part: f64 = lg.iter().map(|&l| (-s * l).exp()).sum();
                part += (-s * br.x0_ln).exp() * tail_bracket(s, br.b);
                acc += br.weight * part;
            }
            out.push(pre * geom * acc);
        }
        Ok(())
    }

    pub fn eval(&self, hurst: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.freqs.len());
        self.eval_into(hurst, &mut out)?;
        Ok(out)
    }
}
