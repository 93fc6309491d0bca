use std::f64::consts::PI;

use fbm_whittle::quadrature::{GradedQuadrature, DEFAULT_PANELS};
use fbm_whittle::spectral::{
    composite_psd, dpsd_dh, noise_psd, psd_limit, psd_preaveraged, BlockSize, CompositeDensity, SpectralModel,
    DEFAULT_TRUNCATION,
};
use fbm_whittle::synthesis::{preaverage, simulate_observations, ModelParams};
use fbm_whittle::Error;
use proptest::prelude::*;

fn log_grid(lo: f64, points: usize) -> Vec<f64> {
    (0..=points).map(|i| lo * (PI / lo).powf(i as f64 / points as f64)).collect()
}

fn linear_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|i| PI * i as f64 / points as f64).collect()
}

fn max_gap(h: f64, k: usize, grid: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
    let fk = SpectralModel::new(h, BlockSize::Finite(k)).unwrap();
    let fi = SpectralModel::new(h, BlockSize::Infinite).unwrap();
    grid.iter()
        .map(|&l| (fk.eval(l).unwrap() - fi.eval(l).unwrap()).abs() / weight(l))
        .fold(0.0, f64::max)
}

#[test]
fn noise_density_values() {
    assert_eq!(noise_psd(0.0), 0.0);
    assert_eq!(noise_psd(PI), 4.0);
    assert!((noise_psd(PI / 2.0) - 2.0).abs() < 1e-15);
}

#[test]
fn zero_frequency_rejected() {
    for block in [BlockSize::Finite(1), BlockSize::Finite(8), BlockSize::Infinite] {
        let m = SpectralModel::new(0.3, block).unwrap();
        assert!(matches!(m.eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(dpsd_dh(0.3, block, 0.0, 1, DEFAULT_TRUNCATION), Err(Error::Domain(_))));
    }
    let cd = CompositeDensity::new(0.3, 4, 1.0, 1.0).unwrap();
    assert!(matches!(composite_psd(&cd, 0.0), Err(Error::Domain(_))));
}

#[test]
fn unit_increment_variance() {
    // (1/2π) ∫ f_{H,1} is the variance of unit-spaced fGn
    let quad = GradedQuadrature::new(PI, DEFAULT_PANELS);
    for h in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let m = SpectralModel::new(h, BlockSize::Finite(1)).unwrap();
        let v = quad.integrate(|l| m.eval(l).unwrap()) / PI;
        assert!((v - 1.0).abs() < 1e-9, "H={h}: {v}");
    }
}

#[test]
fn brownian_limit_density_at_pi() {
    // 16 π⁻⁴ Σ_j |1 + 2j|⁻⁴ = 16 π⁻⁴ · π⁴/48
    let v = psd_limit(0.5, PI, DEFAULT_TRUNCATION).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-13, "{v}");
}

#[test]
fn unit_block_closed_form() {
    // f_{H,1} = Γ(2H+1) sin(πH) 2(1 - cos λ) Σ_j |λ + 2πj|^{-1-2H}, summed directly
    for h in [0.2, 0.5, 0.8] {
        let c = fbm_whittle::special::gamma(2.0 * h + 1.0) * (PI * h).sin();
        for l in [0.05, 0.7, 2.0, PI] {
            let s: f64 = (-200_000i64..=200_000)
                .map(|j| (l + 2.0 * PI * j as f64).abs().powf(-1.0 - 2.0 * h))
                .sum();
            // remaining tail of both sides by the integral
            let tail = 2.0 * (2.0 * PI * 200_000.5f64).powf(-2.0 * h) / (2.0 * h * 2.0 * PI);
            let want = c * noise_psd(l) * (s + tail);
            let got = psd_preaveraged(h, 1, l, DEFAULT_TRUNCATION).unwrap();
            assert!((got / want - 1.0).abs() < 1e-7, "H={h} λ={l}: {got} vs {want}");
        }
    }
}

#[test]
fn truncation_doubling() {
    for h in [0.2, 0.8] {
        for k in [1, 8] {
            for l in [0.1, PI] {
                let a = psd_preaveraged(h, k, l, DEFAULT_TRUNCATION).unwrap();
                let b = psd_preaveraged(h, k, l, 2 * DEFAULT_TRUNCATION).unwrap();
                assert!((a / b - 1.0).abs() < 1e-8, "H={h} k={k} λ={l}");
            }
            let a = psd_limit(h, 0.1, DEFAULT_TRUNCATION).unwrap();
            let b = psd_limit(h, 0.1, 2 * DEFAULT_TRUNCATION).unwrap();
            assert!((a / b - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn derivative_finite_differences() {
    let step = 1e-5;
    for block in [BlockSize::Finite(1), BlockSize::Finite(8), BlockSize::Infinite] {
        for h in [0.3, 0.7] {
            for l in [0.5, 2.0] {
                let f = |hh: f64| SpectralModel::new(hh, block).unwrap().eval(l).unwrap();
                let d1 = dpsd_dh(h, block, l, 1, DEFAULT_TRUNCATION).unwrap();
                let fd1 = (f(h + step) - f(h - step)) / (2.0 * step);
                assert!((d1 / fd1 - 1.0).abs() < 1e-6, "{block:?} H={h} λ={l}: {d1} vs {fd1}");

                let d2 = dpsd_dh(h, block, l, 2, DEFAULT_TRUNCATION).unwrap();
                let h2 = 1e-4;
                let fd2 = (f(h + h2) - 2.0 * f(h) + f(h - h2)) / (h2 * h2);
                assert!((d2 / fd2 - 1.0).abs() < 1e-4, "{block:?} H={h} λ={l}: {d2} vs {fd2}");

                assert_eq!(d1, dpsd_dh(h, block, -l, 1, DEFAULT_TRUNCATION).unwrap());
            }
        }
    }
}

#[test]
fn sandwich_bounds() {
    // c₁, c₂ fitted once on a 200-point log grid over (1e-4, π] across all block sizes
    let frozen = [(0.2, 0.17, 0.88), (0.5, 0.33, 1.0 + 1e-9), (0.8, 0.27, 0.85)];
    for (h, c1, c2) in frozen {
        for block in [BlockSize::Finite(1), BlockSize::Finite(4), BlockSize::Finite(64), BlockSize::Infinite] {
            let m = SpectralModel::new(h, block).unwrap();
            for l in log_grid(1e-4, 1000) {
                let r = m.eval(l).unwrap() / l.powf(1.0 - 2.0 * h);
                assert!(r >= c1 && r <= c2, "H={h} {block:?} λ={l}: {r}");
            }
        }
    }
}

#[test]
fn limit_gap_upper_bound() {
    // |f_{H,k} - f_{H,∞}| ≤ C |λ|^{2∧(3-2H)} / k^{1∧2H}: the fitted C must not grow with k
    let grid = log_grid(1e-3, 400);
    for h in [0.2f64, 0.5, 0.8] {
        let e = (3.0 - 2.0 * h).min(2.0);
        let r = (2.0 * h).min(1.0);
        let cs: Vec<f64> = [4, 8, 16, 32, 64]
            .iter()
            .map(|&k| max_gap(h, k, &grid, |l| l.powf(e)) * (k as f64).powf(r))
            .collect();
        assert!(cs.iter().all(|c| c.is_finite() && *c > 0.0));
        for w in cs.windows(2) {
            assert!(w[1] <= w[0] * 1.01, "H={h}: fitted constants {cs:?}");
        }
    }
}

#[test]
fn limit_gap_rate() {
    // the sup-norm gap shrinks like k^{-min(2, 1+2H)}
    let grid = linear_grid(400);
    for h in [0.2f64, 0.8] {
        let predicted = 2f64.powf(-(1.0 + 2.0 * h).min(2.0));
        let gaps: Vec<f64> = [4, 8, 16, 32].iter().map(|&k| max_gap(h, k, &grid, |_| 1.0)).collect();
        for w in gaps.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio / predicted - 1.0).abs() < 0.2, "H={h}: {ratio} vs {predicted}");
        }
    }
}

#[test]
fn composite_special_cases() {
    let l = 1.3;
    let f = SpectralModel::new(0.4, BlockSize::Finite(5)).unwrap().eval(l).unwrap();
    let noiseless = CompositeDensity::new(0.4, 5, 0.7, 0.0).unwrap();
    assert!((composite_psd(&noiseless, l).unwrap() / (0.49 * f) - 1.0).abs() < 1e-15);
    let pure_noise = CompositeDensity::new(0.4, 5, 0.0, 2.0).unwrap();
    assert!((composite_psd(&pure_noise, l).unwrap() - 0.8 * 2.0 * (1.0 - l.cos())).abs() < 1e-15);
    assert!(CompositeDensity::new(0.4, 5, 0.0, 0.0).is_err());
    assert!(CompositeDensity::new(0.4, 5, -1.0, 1.0).is_err());
}

fn sample_variance_check(k: usize) {
    let (h, sigma, tau, n, reps) = (0.3, 1.0, 0.5, 4096, 10_000);
    let params = ModelParams::new(h, sigma, tau, n).unwrap();
    let nu = sigma * (k as f64 / n as f64).powf(h);
    let cd = CompositeDensity::new(h, k, nu, tau).unwrap();
    let want = GradedQuadrature::new(PI, DEFAULT_PANELS).integrate(|l| cd.eval(l).unwrap()) / PI;
    let sq: Vec<f64> = (0..reps as u64)
        .map(|seed| {
            let y = preaverage(&simulate_observations(&params, seed).unwrap(), k).unwrap();
            y.values[0] * y.values[0]
        })
        .collect();
    let mean = sq.iter().sum::<f64>() / reps as f64;
    let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    assert!((mean - want).abs() < 3.0 * se, "k={k}: {mean} vs {want} (se {se})");
}

#[test]
fn variance_identity_unit_block() {
    sample_variance_check(1);
}

#[test]
fn variance_identity_block_16() {
    sample_variance_check(16);
}

proptest! {
    #[test]
    fn even_and_positive(h in 0.02f64..0.98, k in 1usize..200, l in 1e-6f64..PI, infinite: bool) {
        let block = if infinite { BlockSize::Infinite } else { BlockSize::Finite(k) };
        let m = SpectralModel::new(h, block).unwrap();
        let v = m.eval(l).unwrap();
        prop_assert!(v > 0.0 && v.is_finite());
        prop_assert_eq!(v, m.eval(-l).unwrap());
    }

    #[test]
    fn composite_affine_in_nu_squared(h in 0.05f64..0.95, k in 1usize..64, l in 1e-3f64..PI,
                                      nu in 0.01f64..5.0, tau in 0.0f64..3.0) {
        let a = CompositeDensity::new(h, k, nu, tau).unwrap().eval(l).unwrap();
        let b = CompositeDensity::new(h, k, 2.0 * nu, tau).unwrap().eval(l).unwrap();
        let f = SpectralModel::new(h, BlockSize::Finite(k)).unwrap().eval(l).unwrap();
        prop_assert!(a > 0.0 && b > a);
        prop_assert!(((b - a) / (3.0 * nu * nu * f) - 1.0).abs() < 1e-12);
    }
}
