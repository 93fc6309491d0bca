//! Periodogram `I_N(λ) = N⁻¹ |Σ_{k=1}^N e^{ikλ} Y_k|²` at the positive Fourier
//! frequencies `λ_j = 2πj/N`, `j = 1..=⌊N/2⌋`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::IncrementSeries;

pub const MIN_LENGTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub freqs: Vec<f64>,
    pub values: Vec<f64>,
    /// Length of the series.
    pub n: usize,
}

impl Periodogram {
    /// Weight of each stored frequency in the two-sided sum over all nonzero
    /// Fourier frequencies: 2, except 1 for the Nyquist frequency when `N` is even.
    pub fn fold_weight(&self, j: usize) -> f64 {
        if self.n % 2 == 0 && j + 1 == self.freqs.len() {
            1.0
        } else {
            2.0
        }
    }
}

pub fn periodogram(y: &IncrementSeries) -> Result<Periodogram> {
    periodogram_of(&y.values)
}

pub fn periodogram_of(y: &[f64]) -> Result<Periodogram> {
    let n = y.len();
    if n < MIN_LENGTH {
        return Err(Error::Parameter(format!("periodogram needs at least {MIN_LENGTH} values, got {n}")));
    }
    let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let freqs = (1..=half).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let values = buf[1..=half].iter().map(|c| c.norm_sqr() / n as f64).collect();
    Ok(Periodogram { freqs, values, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_series() {
        let p = periodogram_of(&[0.0; 16]).unwrap();
        assert_eq!(p.values.len(), 8);
        assert!(p.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_tone() {
        let n = 32;
        let y: Vec<f64> = (1..=n).map(|k| (2.0 * PI * k as f64 / n as f64).cos()).collect();
        let p = periodogram_of(&y).unwrap();
        assert_relative_eq!(p.values[0], n as f64 / 4.0, max_relative = 1e-12);
        for v in &p.values[1..] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let y: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let p = periodogram_of(&y).unwrap();
        let n = y.len() as f64;
        let two_sided: f64 = p.values.iter().enumerate().map(|(j, v)| p.fold_weight(j) * v).sum();
        let mean = y.iter().sum::<f64>() / n;
        let energy = y.iter().map(|v| v * v).sum::<f64>() / n;
        assert_relative_eq!(two_sided / n, energy - mean * mean, max_relative = 1e-10);
    }

    #[test]
    fn too_short() {
        assert!(matches!(periodogram_of(&[1.0, 2.0, 3.0]), Err(Error::Parameter(_))));
    }
}
