use std::sync::OnceLock;

use fbm_whittle::asymptotics::variance_fast_regime;
use fbm_whittle::estimators::{
    estimate, fit_with_block, grid_round, grid_round_flagged, optimal_block_size, pilot_block_size, pilot_fit, Bounds,
    EstimatorConfig, PilotConfig, TwoStepConfig,
};
use fbm_whittle::mc::{median, run_study, McConfig, McReport};
use fbm_whittle::spectral::BlockSize;
use fbm_whittle::synthesis::{replicate_seed, simulate_observations, ModelParams};
use fbm_whittle::Error;
use proptest::prelude::*;

const H0: f64 = 0.3;
const GRID_M: usize = 28;

fn bounds() -> Bounds {
    Bounds { h_lo: 0.05, h_hi: 0.6, ..Bounds::default() }
}

fn two_step_config(tau: f64) -> EstimatorConfig {
    EstimatorConfig { bounds: bounds(), tau, grid_m: Some(GRID_M), ..EstimatorConfig::default() }
}

fn study(n: usize, replicates: usize, master_seed: u64) -> McReport {
    let report = run_study(&McConfig {
        params: ModelParams::new(H0, 1.0, 1.0, n).unwrap(),
        estimator: two_step_config(1.0),
        replicates,
        master_seed,
        threads: None,
    })
    .unwrap();
    assert_eq!(report.summary.failures, 0, "{:?}", report.rows.iter().find_map(|r| r.error.clone()));
    report
}

fn shared() -> &'static McReport {
    static STUDY: OnceLock<McReport> = OnceLock::new();
    STUDY.get_or_init(|| study(1 << 16, 200, 11))
}

fn abs_errors(values: impl Iterator<Item = f64>, truth: f64) -> Vec<f64> {
    values.map(|v| (v - truth).abs()).collect()
}

#[test]
fn grid_round_examples() {
    let mut cfg = TwoStepConfig {
        bounds: Bounds { h_lo: 0.1, h_hi: 0.9, ..Bounds::default() },
        tau: 0.0,
        delta_star: 1.0,
        m: 10,
        q: 0.05,
        seed: 0,
    };
    assert!((grid_round(0.3, &cfg, 0.2) - 0.42).abs() < 1e-15);
    cfg.q = 0.0;
    assert_eq!(grid_round(0.1, &cfg, 0.0), 0.1);
    cfg.q = 0.05;
    let (h, clamped) = grid_round_flagged(0.9, &cfg, 0.9);
    assert!(clamped);
    assert_eq!(h, 0.9);
}

#[test]
fn plain_whittle_root_n() {
    let n = 1 << 12;
    let cfg = EstimatorConfig { k: Some(1), pilot_only: true, ..EstimatorConfig::default() };
    let params = ModelParams::new(H0, 1.0, 0.0, n).unwrap();
    let errs = abs_errors(
        (0..50).map(|seed| estimate(&simulate_observations(&params, seed).unwrap(), &cfg).unwrap().pilot.fit.h_hat),
        H0,
    );
    let bound = 2.0 / (n as f64).sqrt();
    assert!(median(&errs) < bound, "{} vs {bound}", median(&errs));
}

#[test]
fn pilot_reproducible_and_sized() {
    let n = 1 << 14;
    let z = simulate_observations(&ModelParams::new(H0, 1.0, 0.5, n).unwrap(), 4).unwrap();
    let cfg = PilotConfig { bounds: bounds(), tau: 0.5, k: None };
    let a = pilot_fit(&z, &cfg).unwrap();
    assert_eq!(a, pilot_fit(&z, &cfg).unwrap());
    assert_eq!(a.k, pilot_block_size(n, 0.6));
    assert_eq!(a.len, (n + 1) / a.k - 1);

    let too_coarse = PilotConfig { bounds: Bounds::default(), ..cfg };
    assert!(matches!(pilot_fit(&z, &too_coarse), Err(Error::SampleTooSmall(_))));
}

#[test]
fn auxiliary_uniform_leaves_pilot_unchanged() {
    let z = simulate_observations(&ModelParams::new(H0, 1.0, 1.0, 1 << 14).unwrap(), 8).unwrap();
    let a = estimate(&z, &EstimatorConfig { seed: 1, ..two_step_config(1.0) }).unwrap();
    let b = estimate(&z, &EstimatorConfig { seed: 2, ..two_step_config(1.0) }).unwrap();
    assert_eq!(a.pilot, b.pilot);
    assert_ne!(a.seeds.unwrap().u, b.seeds.unwrap().u);
}

#[test]
fn report_invariants() {
    let n = 1 << 16;
    for row in &shared().rows {
        let h_grid = row.h_grid.unwrap();
        assert_eq!(row.k_opt.unwrap(), optimal_block_size(n, h_grid));
        assert_eq!(row.k_opt.unwrap(), (n as f64).powf(2.0 * h_grid / (2.0 * h_grid + 1.0)).floor() as usize);
        assert!(row.h_hat.unwrap() <= h_grid);
    }
}

#[test]
fn pilot_spread_matches_limit() {
    let rows = &shared().rows;
    let len = rows[0].pilot_len.unwrap() as f64;
    let scaled: Vec<f64> = rows.iter().map(|r| len.sqrt() * (r.pilot_h.unwrap() - H0)).collect();
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let sd = (scaled.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (scaled.len() as f64 - 1.0)).sqrt();
    let theory = variance_fast_regime(H0, BlockSize::Infinite).unwrap().sqrt();
    println!("pilot: empirical sd {sd:.4}, limit {theory:.4}");
    assert!((sd / theory - 1.0).abs() < 0.25, "{sd} vs {theory}");
}

#[test]
fn two_step_beats_pilot() {
    let rows = &shared().rows;
    let pilot = median(&abs_errors(rows.iter().map(|r| r.pilot_h.unwrap()), H0));
    let opt = median(&abs_errors(rows.iter().map(|r| r.h_hat.unwrap()), H0));
    println!("median |error|: pilot {pilot:.4}, two-step {opt:.4}");
    assert!(opt <= pilot);
}

#[test]
fn coverage_of_limit_interval() {
    let c = shared().summary.coverage_h.unwrap();
    println!("coverage {c:.3}");
    assert!((0.90..=0.99).contains(&c), "{c}");
}

#[test]
fn restricted_fit_coincides_with_unrestricted() {
    let n = 1 << 16;
    let params = ModelParams::new(H0, 1.0, 1.0, n).unwrap();
    let cfg = two_step_config(1.0);
    let (mut eligible, mut coincide) = (0, 0);
    for i in 0..60 {
        let seed = replicate_seed(1000, i);
        let z = simulate_observations(&params, seed).unwrap();
        let r = estimate(&z, &EstimatorConfig { seed, ..cfg }).unwrap();
        if r.h_grid.unwrap() <= H0 {
            continue;
        }
        eligible += 1;
        let opt = r.optimal.unwrap();
        let (free, _) = fit_with_block(&z, opt.k, &cfg.bounds, cfg.bounds.h_hi, cfg.tau).unwrap();
        if !opt.fit.boundary_hit.h_hi && (free.h_hat - opt.fit.h_hat).abs() < 1e-6 {
            coincide += 1;
        }
    }
    println!("coincident in {coincide} of {eligible}");
    assert!(eligible >= 30);
    assert!(coincide * 10 >= eligible * 9, "{coincide} of {eligible}");
}

#[test]
fn scale_estimate_consistency() {
    // median |σ̂ - σ₀| against n^{-1/(4H₀+2)} log n across n = 2¹⁴, 2¹⁶, 2¹⁸
    let small = study(1 << 14, 100, 21);
    let large = study(1 << 18, 100, 31);
    let med = |r: &McReport| median(&abs_errors(r.rows.iter().map(|x| x.sigma_hat.unwrap()), 1.0));
    let rate = |n: f64| n.powf(-1.0 / (4.0 * H0 + 2.0)) * n.ln();
    let pts = [(1usize << 14, med(&small)), (1 << 16, med(shared())), (1 << 18, med(&large))];
    println!("median |σ̂ - σ₀|: {pts:?}");
    for w in pts.windows(2) {
        let observed = w[1].1 / w[0].1;
        let predicted = rate(w[1].0 as f64) / rate(w[0].0 as f64);
        assert!(observed < 1.0, "{pts:?}");
        assert!(observed / predicted > 0.5 && observed / predicted < 2.0, "{observed} vs {predicted}");
    }
}

proptest! {
    #[test]
    fn grid_round_properties(lo in 0.01f64..0.5, width in 0.05f64..0.49, m in 1usize..200, q in 0.0f64..0.2,
                             u in 0.0f64..1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let hi = lo + width;
        let cfg = TwoStepConfig {
            bounds: Bounds { h_lo: lo, h_hi: hi, ..Bounds::default() },
            tau: 0.0,
            delta_star: 1.0,
            m,
            q,
            seed: 0,
        };
        let (h1, h2) = (lo + a.min(b) * width, lo + a.max(b) * width);
        let (g1, clamped) = grid_round_flagged(h1, &cfg, u);
        let g2 = grid_round(h2, &cfg, u);
        prop_assert!(g1 <= g2);
        prop_assert!(g1 >= lo && g1 <= hi);
        if clamped {
            prop_assert_eq!(g1, hi);
        } else {
            prop_assert!(g1 >= h1 + q - width / m as f64 - 1e-12);
        }
    }

    #[test]
    fn pilot_schedule(exp in 10u32..31, h_plus in 0.05f64..0.95) {
        let n = 1usize << exp;
        let k = pilot_block_size(n, h_plus);
        prop_assert!(k >= 2 && k < n);
        let bounded = (n as f64).powf(2.0 * h_plus) / (k as f64).powf(2.0 * h_plus + 1.0);
        prop_assert!(bounded <= 1.0 + 1e-9);
        prop_assert!(pilot_block_size(4 * n, h_plus) >= k);
        prop_assert!(pilot_block_size(n * n, h_plus) > k);
        prop_assert!((n * n) / pilot_block_size(n * n, h_plus) > n / k);
    }
}
