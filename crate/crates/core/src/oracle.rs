//! Dense reference computations for small samples: Toeplitz covariance
//! matrices from spectral densities, exact cumulants of Gaussian quadratic
//! forms, trace limits and the exact Gaussian likelihood.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GradedQuadrature;
use crate::spectral::{dpsd_dh, noise_psd, BlockSize, CompositeDensity, SpectralModel, DEFAULT_TRUNCATION};

pub const MAX_DIMENSION: usize = 4096;

/// Symmetric Toeplitz matrix with entries `φ̂(|k - l|)`, where
/// `φ̂(τ) = (1/2π) ∫_{-π}^{π} φ(λ) e^{iλτ} dλ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzOperator {
    pub first_row: Vec<f64>,
    pub n: usize,
}

impl ToeplitzOperator {
    pub fn from_first_row(first_row: Vec<f64>) -> Self {
        let n = first_row.len();
        ToeplitzOperator { first_row, n }
    }

    pub fn identity(n: usize) -> Self {
        let mut row = vec![0.0; n];
        row[0] = 1.0;
        Self::from_first_row(row)
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.first_row[k.abs_diff(l)]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |k, l| self.get(k, l))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ToeplitzOperator, b: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Parameter(format!("dimensions {} and {} differ", self.n, other.n)));
        }
        Ok(Self::from_first_row(
            self.first_row.iter().zip(&other.first_row).map(|(x, y)| a * x + b * y).collect(),
        ))
    }
}

/// Fourier coefficients `φ̂(0..n)` of an even density by graded quadrature on
/// `(0, π]` with `panels` panels.
pub fn toeplitz_from_density<F>(phi: F, n: usize, panels: usize) -> Result<ToeplitzOperator>
where
    F: Fn(f64) -> Result<f64>,
{
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::Parameter(format!("dimension {n} outside [1, {MAX_DIMENSION}]")));
    }
    let quad = GradedQuadrature::new(PI, panels.max(2));
    let mut failure = None;
    let coeffs = quad.integrate_components(n, |l, out| {
        let v = match phi(l) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                failure.get_or_insert(Error::Numerical(format!("density is {v} at {l}")));
                0.0
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        // cos(τλ) by the three-term recurrence
        let c1 = l.cos();
        let (mut prev, mut cur) = (c1, 1.0);
        for o in out.iter_mut() {
            *o = v * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ToeplitzOperator::from_first_row(coeffs.into_iter().map(|c| c / PI).collect()))
}

/// Covariance of `ν² f_{H,k} + (τ²/k) l`; the noise part is exact.
pub fn composite_covariance(cd: &CompositeDensity, n: usize, panels: usize) -> Result<ToeplitzOperator> {
    let model = cd.spectral;
    let signal = toeplitz_from_density(|l| model.eval(l), n, panels)?;
    let mut row: Vec<f64> = signal.first_row.iter().map(|v| cd.nu * cd.nu * v).collect();
    let w = cd.noise_weight();
    row[0] += 2.0 * w;
    if n > 1 {
        row[1] -= w;
    }
    Ok(ToeplitzOperator::from_first_row(row))
}

/// `2^{k-1} (k-1)! Tr((ΛΓ)^k)`, the `k`-th cumulant of `ξᵀΛξ` for
/// `ξ ~ N(0, Γ)`.
pub fn quadratic_form_cumulant(lambda_mat: &ToeplitzOperator, gamma_mat: &ToeplitzOperator, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::Parameter("cumulant order must be at least 1".into()));
    }
    if lambda_mat.n != gamma_mat.n {
        return Err(Error::Parameter(format!(
            "dimensions {} and {} differ",
            lambda_mat.n, gamma_mat.n
        )));
    }
    let p = lambda_mat.to_matrix() * gamma_mat.to_matrix();
    let mut acc = p.clone();
    for _ in 1..order {
        acc = &acc * &p;
    }
    let factorial: f64 = (1..order).map(f64::from).product();
    Ok(2f64.powi(order as i32 - 1) * factorial * acc.trace())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub normalized_trace: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLimitTable {
    pub rows: Vec<TraceRow>,
    /// `(2π)⁻¹ ∫ (φ₁φ₂)^p`.
    pub limit: f64,
}

impl TraceLimitTable {
    /// Whether `|gap|` decreases along `rows`.
    pub fn gap_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs())
    }
}

/// `n⁻¹ Tr((Σ_n(φ₁)Σ_n(φ₂))^p)` for each `n` against its limit.
pub fn trace_limit_check<F1, F2>(phi1: F1, phi2: F2, p: u32, n_list: &[usize], panels: usize) -> Result<TraceLimitTable>
where
    F1: Fn(f64) -> Result<f64> + Copy,
    F2: Fn(f64) -> Result<f64> + Copy,
{
    if p == 0 {
        return Err(Error::Parameter("power must be at least 1".into()));
    }
    let quad = GradedQuadrature::new(PI, panels.max(2));
    let mut failure = None;
    let integral = quad.integrate(|l| match (phi1(l), phi2(l)) {
        (Ok(a), Ok(b)) => (a * b).powi(p as i32),
        (Err(e), _) | (_, Err(e)) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let limit = integral / PI;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let a = toeplitz_from_density(phi1, n, panels)?.to_matrix();
        let b = toeplitz_from_density(phi2, n, panels)?.to_matrix();
        let trace = if p == 1 {
            a.component_mul(&b.transpose()).sum()
        } else {
            let prod = a * b;
            let mut acc = prod.clone();
            for _ in 1..p {
                acc = &acc * &prod;
            }
            acc.trace()
        };
        let t = trace / n as f64;
        rows.push(TraceRow { n, normalized_trace: t, gap: t - limit });
    }
    Ok(TraceLimitTable { rows, limit })
}

/// `yᵀΣ⁻¹y + log det Σ` for a Toeplitz covariance.
pub fn neg2_loglik_with_covariance(y: &[f64], cov: &ToeplitzOperator) -> Result<f64> {
    let (q, log_det) = quadratic_form_and_log_det(y, cov)?;
    Ok(q + log_det)
}

/// `(yᵀΣ⁻¹y, log det Σ)` from one Cholesky factorisation.
pub fn quadratic_form_and_log_det(y: &[f64], cov: &ToeplitzOperator) -> Result<(f64, f64)> {
    if y.len() != cov.n {
        return Err(Error::Parameter(format!("{} values for a {}-dimensional covariance", y.len(), cov.n)));
    }
    let chol = cov
        .to_matrix()
        .cholesky()
        .ok_or_else(|| Error::Numerical("covariance matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let log_det: f64 = 2.0 * (0..cov.n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let z = l
        .solve_lower_triangular(&DVector::from_column_slice(y))
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok((z.norm_squared(), log_det))
}

/// Exact `-2 log`-likelihood (without the `N log 2π` constant) of `y` under
/// the stationary Gaussian law with spectral density `cd`.
pub fn exact_gaussian_loglik(y: &[f64], cd: &CompositeDensity, panels: usize) -> Result<f64> {
    let n = y.len();
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::Parameter(format!("length {n} outside [1, {MAX_DIMENSION}]")));
    }
    neg2_loglik_with_covariance(y, &composite_covariance(cd, n, panels)?)
}

/// Exact Fisher information per observation of `n` consecutive values with
/// spectral density `ν² f_{H,block}`, in the parameters `(H, log ν²)`.
pub fn exact_fisher_information(hurst: f64, block: BlockSize, n: usize, panels: usize) -> Result<[[f64; 2]; 2]> {
    let model = SpectralModel::new(hurst, block)?;
    let t = toeplitz_from_density(|l| model.eval(l), n, panels)?.to_matrix();
    let dt = toeplitz_from_density(|l| dpsd_dh(hurst, block, l, 1, DEFAULT_TRUNCATION), n, panels)?.to_matrix();
    let chol = t
        .cholesky()
        .ok_or_else(|| Error::Numerical("covariance matrix is not positive definite".into()))?;
    let a = chol.solve(&dt);
    let nf = n as f64;
    let i_hh = 0.5 * (&a * &a).trace() / nf;
    let i_hc = 0.5 * a.trace() / nf;
    Ok([[i_hh, i_hc], [i_hc, 0.5]])
}

/// `φ(λ) = 2(1 - cos λ)` as a fallible evaluator.
pub fn noise_density(lambda: f64) -> Result<f64> {
    Ok(noise_psd(lambda))
}
