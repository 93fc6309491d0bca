//! Whittle contrast in the `(H, ν)` parametrisation and its minimisation.
//!
//! The contrast `(1/4π) ∫ log g + I/g` is approximated by the Riemann sum
//! over the nonzero Fourier frequencies, `(1/2N) Σ_j [log g(λ_j) + I(λ_j)/g(λ_j)]`,
//! folded onto the positive frequencies by evenness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::periodogram::Periodogram;
use crate::spectral::{noise_psd, BlockSize, SpectralGrid};

pub const GRID_POINTS: usize = 25;

/// Admissible rectangle and the known quantities of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpec {
    pub h_lo: f64,
    pub h_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Block size of the pre-averaging.
    pub k: usize,
    /// Number of sampling intervals of the raw observations.
    pub n: usize,
    /// Known noise level.
    pub tau: f64,
}

impl ContrastSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.h_lo > 0.0 && self.h_lo <= self.h_hi && self.h_hi < 1.0) {
            return Err(Error::Parameter(format!(
                "Hurst bounds [{}, {}] must satisfy 0 < lo <= hi < 1",
                self.h_lo, self.h_hi
            )));
        }
        if !(self.sigma_lo > 0.0 && self.sigma_lo <= self.sigma_hi && self.sigma_hi.is_finite()) {
            return Err(Error::Parameter(format!(
                "scale bounds [{}, {}] must satisfy 0 < lo <= hi",
                self.sigma_lo, self.sigma_hi
            )));
        }
        if self.k == 0 || self.n == 0 {
            return Err(Error::Parameter("k and n must be positive".into()));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau = {} must be nonnegative", self.tau)));
        }
        Ok(())
    }

    /// `k/n`, the time span of one block.
    pub fn block_span(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// `[(k/n)^{H₊} σ₋, (k/n)^{H₋} σ₊]`.
    pub fn nu_bounds(&self) -> (f64, f64) {
        let r = self.block_span();
        (r.powf(self.h_hi) * self.sigma_lo, r.powf(self.h_lo) * self.sigma_hi)
    }

    /// `σ = ν (n/k)^H`.
    pub fn sigma_from_nu(&self, h: f64, nu: f64) -> f64 {
        nu * self.block_span().powf(-h)
    }

    pub fn nu_from_sigma(&self, h: f64, sigma: f64) -> f64 {
        sigma * self.block_span().powf(h)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryHit {
    pub h_lo: bool,
    pub h_hi: bool,
    pub nu_lo: bool,
    pub nu_hi: bool,
}

impl BoundaryHit {
    pub fn any(&self) -> bool {
        self.h_lo || self.h_hi || self.nu_lo || self.nu_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittleFit {
    pub h_hat: f64,
    pub nu_hat: f64,
    pub sigma_hat: f64,
    pub contrast: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub boundary_hit: BoundaryHit,
}

/// Contrast evaluator bound to one periodogram.
pub struct Whittle<'a> {
    spec: ContrastSpec,
    pg: &'a Periodogram,
    grid: SpectralGrid,
    noise: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> Whittle<'a> {
    pub fn new(spec: ContrastSpec, pg: &'a Periodogram) -> Result<Self> {
        spec.validate()?;
        let grid = SpectralGrid::new(BlockSize::Finite(spec.k), &pg.freqs)?;
        let w = spec.tau * spec.tau / spec.k as f64;
        let noise = pg.freqs.iter().map(|&l| w * noise_psd(l)).collect();
        let scale = 1.0 / (2.0 * pg.n as f64);
        let weights = (0..pg.freqs.len()).map(|j| scale * pg.fold_weight(j)).collect();
        Ok(Whittle { spec, pg, grid, noise, weights })
    }

    pub fn spec(&self) -> &ContrastSpec {
        &self.spec
    }

    /// `f_{H,k}` at the periodogram frequencies.
    pub fn density(&self, h: f64) -> Result<Vec<f64>> {
        self.grid.eval(h)
    }

    /// Contrast for precomputed `f_{H,k}` values.
    pub fn contrast_from_density(&self, f: &[f64], nu: f64) -> Result<f64> {
        let nu2 = nu * nu;
        let mut acc = 0.0;
        for (((fj, ij), lj), wj) in f.iter().zip(&self.pg.values).zip(&self.noise).zip(&self.weights) {
            let g = nu2 * fj + lj;
            if !(g > 0.0) {
                return Err(Error::Numerical(format!("spectral density {g} is not positive")));
            }
            acc += wj * (g.ln() + ij / g);
        }
        Ok(acc)
    }

    pub fn contrast(&self, h: f64, nu: f64) -> Result<f64> {
        self.contrast_from_density(&self.density(h)?, nu)
    }

    /// Coarse grid search followed by Nelder–Mead in `(H, log ν)`.
    pub fn minimize(&self) -> Result<WhittleFit> {
        let (nu_lo, nu_hi) = self.spec.nu_bounds();
        self.minimize_in(nu_lo, nu_hi)
    }

    /// As [`Whittle::minimize`] over `[h_lo, h_hi] × [nu_lo, nu_hi]`.
    pub fn minimize_in(&self, nu_lo: f64, nu_hi: f64) -> Result<WhittleFit> {
        let spec = &self.spec;
        if !(nu_lo > 0.0 && nu_lo <= nu_hi && nu_hi.is_finite()) {
            return Err(Error::Parameter(format!("scale range [{nu_lo}, {nu_hi}] is empty")));
        }
        let (lnu_lo, lnu_hi) = (nu_lo.ln(), nu_hi.ln());
        let h_count = if spec.h_hi > spec.h_lo { GRID_POINTS } else { 1 };
        let nu_count = if nu_hi > nu_lo { GRID_POINTS } else { 1 };
        let at = |lo: f64, hi: f64, count: usize, i: usize| {
            if count == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        };

        let mut evaluations = 0;
        let mut best = (f64::INFINITY, spec.h_lo, lnu_lo);
        for i in 0..h_count {
            let h = at(spec.h_lo, spec.h_hi, h_count, i);
            let f = self.density(h)?;
            for j in 0..nu_count {
                let lnu = at(lnu_lo, lnu_hi, nu_count, j);
                let c = self.contrast_from_density(&f, lnu.exp())?;
                evaluations += 1;
                if c < best.0 {
                    best = (c, h, lnu);
                }
            }
        }

        let mut cache: Option<(f64, Vec<f64>)> = None;
        let mut failure = None;
        let objective = |x: &[f64]| -> f64 {
            let h = x[0];
            if cache.as_ref().map(|c| c.0) != Some(h) {
                match self.density(h) {
                    Ok(f) => cache = Some((h, f)),
                    Err(e) => {
                        failure = Some(e);
                        return f64::INFINITY;
                    }
                }
            }
            let f = &cache.as_ref().expect("density cached").1;
            match self.contrast_from_density(f, x[1].exp()) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    f64::INFINITY
                }
            }
        };
        let step = [
            ((spec.h_hi - spec.h_lo) / (GRID_POINTS - 1) as f64).max(1e-6),
            ((lnu_hi - lnu_lo) / (GRID_POINTS - 1) as f64).max(1e-6),
        ];
        let res = nelder_mead(
            objective,
            &[best.1, best.2],
            &step,
            &[spec.h_lo, lnu_lo],
            &[spec.h_hi, lnu_hi],
            NelderMeadOptions::default(),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        evaluations += res.evals;
        let (h_hat, lnu, contrast) = if res.value <= best.0 {
            (res.x[0], res.x[1], res.value)
        } else {
            (best.1, best.2, best.0)
        };
        let nu_hat = lnu.exp();
        let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
        Ok(WhittleFit {
            h_hat,
            nu_hat,
            sigma_hat: spec.sigma_from_nu(h_hat, nu_hat),
            contrast,
            evaluations,
            converged: res.converged,
            boundary_hit: BoundaryHit {
                h_lo: near(h_hat, spec.h_lo),
                h_hi: near(h_hat, spec.h_hi),
                nu_lo: near(lnu, lnu_lo),
                nu_hi: near(lnu, lnu_hi),
            },
        })
    }
}

/// `U(H, ν)` for one periodogram.
pub fn contrast(spec: &ContrastSpec, pg: &Periodogram, h: f64, nu: f64) -> Result<f64> {
    Whittle::new(*spec, pg)?.contrast(h, nu)
}

/// `argmin U` over the admissible rectangle.
pub fn minimize(spec: &ContrastSpec, pg: &Periodogram) -> Result<WhittleFit> {
    Whittle::new(*spec, pg)?.minimize()
}
