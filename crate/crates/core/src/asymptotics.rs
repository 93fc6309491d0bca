//! Limit variances of the Whittle estimators and the Fisher information of
//! the fast-noise experiment, by quadrature of spectral integrals.
//!
//! Integrands are even in `λ`, so every `∫_{-π}^{π}` is computed as twice the
//! integral over `(0, π]` on a mesh graded towards the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{GradedQuadrature, DEFAULT_PANELS};
use crate::spectral::{noise_psd, BlockSize, SpectralModel};

/// Relative size below which a Gram determinant or variance denominator is
/// treated as zero.
const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// Variance of the centred Gaussian limit `X` of the rate-scaled H error.
    pub var_h: f64,
    /// `Var(σ limit) = var_sigma_factor · rate_factor² · var_h`.
    pub var_sigma_factor: f64,
    pub gamma_star: Option<f64>,
    /// Multiplier of `X` in the limit of the H error; 1 in the fast regime.
    pub rate_factor: f64,
    /// Multiplier of `X` in the limit of the σ error, `rate_factor` excluded.
    pub sigma_multiplier: f64,
    /// Relative change of `var_h` when the quadrature mesh is halved.
    pub quadrature_error: f64,
}

impl VarianceReport {
    /// Limit standard deviation of the rate-scaled H error.
    pub fn sd_h(&self) -> f64 {
        self.rate_factor * self.var_h.sqrt()
    }

    /// Limit standard deviation of the rate-scaled σ error.
    pub fn sd_sigma(&self) -> f64 {
        self.sigma_multiplier.abs() * self.sd_h()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    /// Local directions `(α, ᾱ, γ, γ̄)` of the rate matrices.
    RateDirections,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub matrix: [[f64; 2]; 2],
    pub parametrization: Parametrization,
}

impl FisherInfo {
    pub fn inverse(&self) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.matrix;
        let det = a * d - b * c;
        if !(det.abs() > DEGENERACY_TOL * (a * d).abs().max((b * c).abs())) {
            return Err(Error::Degenerate("Fisher information is singular".into()));
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.matrix;
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mid - rad, mid + rad]
    }
}

fn quadrature(panels: usize) -> GradedQuadrature {
    GradedQuadrature::new(PI, panels)
}

/// `(∫ d, ∫ d²)` over `[-π, π]` with `d = ∂_H f / f`.
fn score_moments(model: &SpectralModel, panels: usize) -> Result<(f64, f64)> {
    let mut failure = None;
    let v = quadrature(panels).integrate_components(2, |l, out| match model.eval_derivs(l) {
        Ok(f) => {
            let d = f.d1 / f.v;
            out[0] = d;
            out[1] = d * d;
        }
        Err(e) => {
            failure.get_or_insert(e);
            out[0] = 0.0;
            out[1] = 0.0;
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((2.0 * v[0], 2.0 * v[1])),
    }
}

fn fast_variance_from_moments(m1: f64, m2: f64) -> Result<f64> {
    let (a, b) = (m2 / (2.0 * PI), m1 / (2.0 * PI));
    let denom = a - b * b;
    if !(denom > DEGENERACY_TOL * a) {
        return Err(Error::Degenerate(format!(
            "score variance {denom:e} vanishes; the density is not identifiable in H"
        )));
    }
    Ok(2.0 / denom)
}

fn relative_change(a: f64, b: f64) -> f64 {
    ((a - b) / a).abs()
}

/// Variance formula for an arbitrary density: `density(λ)` returns
/// `(f(λ), ∂_H f(λ))`.
pub fn variance_fast_regime_with<F>(density: F) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let mut failure = None;
    let v = quadrature(DEFAULT_PANELS).integrate_components(2, |l, out| match density(l) {
        Ok((f, df)) => {
            out[0] = df / f;
            out[1] = out[0] * out[0];
        }
        Err(e) => {
            failure.get_or_insert(e);
            out[0] = 0.0;
            out[1] = 0.0;
        }
    });
    match failure {
        Some(e) => Err(e),
        None => fast_variance_from_moments(2.0 * v[0], 2.0 * v[1]),
    }
}

/// Limit variance of `√n(Ĥ - H)` for spectral density `f_{H, block}`:
/// `2 / ((1/2π)∫d² - ((1/2π)∫d)²)`, `d = ∂_H log f`.
pub fn variance_fast_regime(hurst: f64, block: BlockSize) -> Result<f64> {
    let model = SpectralModel::new(hurst, block)?;
    let (m1, m2) = score_moments(&model, DEFAULT_PANELS)?;
    fast_variance_from_moments(m1, m2)
}

/// Full report for the fast regime; the σ error scaled by `√n / log n`
/// converges to `σ₀` times the H limit.
pub fn fast_regime_report(hurst: f64, sigma0: f64, block: BlockSize) -> Result<VarianceReport> {
    if !(sigma0 > 0.0) {
        return Err(Error::Parameter(format!("sigma0 = {sigma0} must be positive")));
    }
    let model = SpectralModel::new(hurst, block)?;
    let (m1, m2) = score_moments(&model, DEFAULT_PANELS)?;
    let var_h = fast_variance_from_moments(m1, m2)?;
    let (c1, c2) = score_moments(&model, DEFAULT_PANELS / 2)?;
    let coarse = fast_variance_from_moments(c1, c2)?;
    Ok(VarianceReport {
        var_h,
        var_sigma_factor: sigma0 * sigma0,
        gamma_star: None,
        rate_factor: 1.0,
        sigma_multiplier: sigma0,
        quadrature_error: relative_change(var_h, coarse),
    })
}

/// The three weighted integrals `(∫f²/f*, ∫(∂f)²/f*, ∫f∂f/f*)` over `[-π, π]`
/// with `f = f_{H,∞}` and `f* = (σ²f + γ*τ²l)²`.
pub fn optimal_regime_integrals(h0: f64, sigma0: f64, tau: f64, gamma_star: f64, panels: usize) -> Result<[f64; 3]> {
    let model = SpectralModel::new(h0, BlockSize::Infinite)?;
    let (s2, w) = (sigma0 * sigma0, gamma_star * tau * tau);
    let mut failure = None;
    let v = quadrature(panels).integrate_components(3, |l, out| match model.eval_derivs(l) {
        Ok(f) => {
            let g = s2 * f.v + w * noise_psd(l);
            let inv = 1.0 / (g * g);
            out[0] = f.v * f.v * inv;
            out[1] = f.d1 * f.d1 * inv;
            out[2] = f.v * f.d1 * inv;
        }
        Err(e) => {
            failure.get_or_insert(e);
            out.iter_mut().for_each(|o| *o = 0.0);
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok([2.0 * v[0], 2.0 * v[1], 2.0 * v[2]]),
    }
}

fn optimal_variance_from_integrals(sigma0: f64, [a, b, c]: [f64; 3]) -> Result<f64> {
    let gram = a * b - c * c;
    if !(gram > DEGENERACY_TOL * a * b) {
        return Err(Error::Degenerate(format!("Gram determinant {gram:e} vanishes")));
    }
    Ok(4.0 * PI / sigma0.powi(4) * a / gram)
}

/// Limit law of the two-step estimator: `X` and its multipliers.
pub fn variance_optimal_regime(h0: f64, sigma0: f64, tau: f64, gamma_star: f64) -> Result<VarianceReport> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::Parameter(format!("sigma0 = {sigma0} must be positive")));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(format!("tau = {tau} must be nonnegative")));
    }
    if !(gamma_star > 0.0 && gamma_star.is_finite()) {
        return Err(Error::Parameter(format!("gamma_star = {gamma_star} must be positive")));
    }
    let var_h = optimal_variance_from_integrals(sigma0, optimal_regime_integrals(h0, sigma0, tau, gamma_star, DEFAULT_PANELS)?)?;
    let coarse = optimal_variance_from_integrals(
        sigma0,
        optimal_regime_integrals(h0, sigma0, tau, gamma_star, DEFAULT_PANELS / 2)?,
    )?;
    let multiplier = sigma0 / (2.0 * h0 + 1.0);
    Ok(VarianceReport {
        var_h,
        var_sigma_factor: multiplier * multiplier,
        gamma_star: Some(gamma_star),
        rate_factor: gamma_star.powf(-1.0 / (4.0 * h0 + 2.0)),
        sigma_multiplier: multiplier,
        quadrature_error: relative_change(var_h, coarse),
    })
}

/// `exp(-2δ*/(2H+1))`.
pub fn gamma_star(delta_star: f64, h0: f64) -> f64 {
    (-2.0 * delta_star / (2.0 * h0 + 1.0)).exp()
}

/// Fisher information of the fast-noise experiment for the local directions
/// `(α, ᾱ)` and limits `(γ, γ̄)` of the rate matrices. `sigma0` enters only
/// through the directions.
pub fn fisher_information(
    h0: f64,
    block: BlockSize,
    alpha: f64,
    alpha_bar: f64,
    gamma: f64,
    gamma_bar: f64,
) -> Result<FisherInfo> {
    let det = alpha * gamma_bar - alpha_bar * gamma;
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Parameter("rate directions are degenerate".into()));
    }
    let model = SpectralModel::new(h0, block)?;
    let (m1, m2) = score_moments(&model, DEFAULT_PANELS)?;
    let central = [[8.0 * PI, -2.0 * m1], [-2.0 * m1, m2]];
    let d = [[gamma, -alpha], [gamma_bar, -alpha_bar]];
    let mut matrix = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += d[i][a] * central[a][b] * d[j][b];
                }
            }
            matrix[i][j] = s / (4.0 * PI);
        }
    }
    matrix[1][0] = matrix[0][1];
    Ok(FisherInfo { matrix, parametrization: Parametrization::RateDirections })
}

/// `v₀² = 2 / ((1/2π)∫d² - ((1/2π)∫d)²)`, the minimax bound for `√n(Ĥ - H)`.
pub fn lower_bound_v0_squared(h0: f64, block: BlockSize) -> Result<f64> {
    let v0 = 2f64.sqrt() * {
        let model = SpectralModel::new(h0, block)?;
        let (m1, m2) = score_moments(&model, DEFAULT_PANELS)?;
        let (a, b) = (m2 / (2.0 * PI), m1 / (2.0 * PI));
        let denom = a - b * b;
        if !(denom > DEGENERACY_TOL * a) {
            return Err(Error::Degenerate("score variance vanishes".into()));
        }
        denom.powf(-0.5)
    };
    Ok(v0 * v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn noiseless_optimal_regime_reduces_to_fast_regime() {
        for &h in &[0.2, 0.5, 0.8] {
            let fast = variance_fast_regime(h, BlockSize::Infinite).unwrap();
            for &g in &[0.3, 1.0] {
                let r = variance_optimal_regime(h, 1.7, 0.0, g).unwrap();
                assert_relative_eq!(r.var_h, fast, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn quadrature_is_converged() {
        let r = variance_optimal_regime(0.3, 1.0, 1.0, 0.5).unwrap();
        assert!(r.quadrature_error < 1e-6, "{r:?}");
        let f = fast_regime_report(0.3, 1.0, BlockSize::Finite(1)).unwrap();
        assert!(f.quadrature_error < 1e-6, "{f:?}");
        assert_eq!(f.var_sigma_factor, 1.0);
    }

    #[test]
    fn rate_factor_scaling() {
        let a = variance_optimal_regime(0.3, 1.0, 1.0, 0.6).unwrap();
        let b = variance_optimal_regime(0.3, 1.0, 1.0, 0.3).unwrap();
        assert_relative_eq!(b.rate_factor / a.rate_factor, 2f64.powf(1.0 / 3.2), max_relative = 1e-14);
        assert_relative_eq!(a.var_sigma_factor, (1.0f64 / 1.6).powi(2), max_relative = 1e-14);
    }

    #[test]
    fn fisher_information_for_the_lower_bound_directions() {
        for &h in &[0.2, 0.6] {
            let sigma = 1.3;
            let fi = fisher_information(h, BlockSize::Finite(1), 1.0, 0.0, 0.0, 1.0 / sigma).unwrap();
            assert_relative_eq!(fi.matrix[1][1], 2.0 / (sigma * sigma), max_relative = 1e-12);
            assert_eq!(fi.matrix[0][1], fi.matrix[1][0]);
            let inv = fi.inverse().unwrap();
            let v = variance_fast_regime(h, BlockSize::Finite(1)).unwrap();
            assert_relative_eq!(inv[0][0], v, max_relative = 1e-10);
            assert_relative_eq!(lower_bound_v0_squared(h, BlockSize::Finite(1)).unwrap(), v, max_relative = 1e-12);
            assert!(fi.eigenvalues()[0] > -1e-10);
        }
    }

    #[test]
    fn degenerate_directions() {
        assert!(matches!(
            fisher_information(0.3, BlockSize::Infinite, 1.0, 2.0, 0.5, 1.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn gamma_star_default() {
        assert_relative_eq!(gamma_star(2f64.ln(), 0.5), 0.5, max_relative = 1e-15);
    }
}
