//! Composite Gauss–Legendre quadrature on a mesh graded towards zero.
//!
//! The spectral densities behave like `|λ|^{1-2H}` at the origin, and their
//! log-derivatives like `log |λ|`. Panels are uniform in `t` with
//! `λ = upper · t^p`, so panel `i` covers `[upper (i/M)^p, upper ((i+1)/M)^p]`.
//! On the first panel the integrand is replaced by the power law through its
//! values at a quarter of the panel and at its end, integrated exactly.

use std::f64::consts::PI;

pub const DEFAULT_PANELS: usize = 4096;
pub const DEFAULT_GRADING: f64 = 3.0;
pub const DEFAULT_POINTS: usize = 6;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature rule for `∫_0^upper φ(λ) dλ`.
#[derive(Debug, Clone)]
pub struct GradedQuadrature {
    upper: f64,
    panels: usize,
    first_end: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GradedQuadrature {
    pub fn new(upper: f64, panels: usize) -> Self {
        Self::with_options(upper, panels, DEFAULT_GRADING, DEFAULT_POINTS)
    }

    pub fn with_options(upper: f64, panels: usize, grading: f64, points: usize) -> Self {
        assert!(panels >= 2 && upper > 0.0 && grading >= 1.0);
        let (gx, gw) = gauss_legendre(points);
        let m = panels as f64;
        let map = |t: f64| upper * t.powf(grading);
        let jac = |t: f64| upper * grading * t.powf(grading - 1.0);
        let mut nodes = Vec::with_capacity((panels - 1) * points);
        let mut weights = Vec::with_capacity((panels - 1) * points);
        for i in 1..panels {
            let (t0, t1) = (i as f64 / m, (i + 1) as f64 / m);
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t1 + t0);
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                nodes.push(map(t));
                weights.push(w * half * jac(t));
            }
        }
        GradedQuadrature {
            upper,
            panels,
            first_end: map(1.0 / m),
            nodes,
            weights,
        }
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn len(&self) -> usize {
        self.nodes.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integrate `dim` integrands at once. `f(λ, out)` fills `out[..dim]`.
    pub fn integrate_components<F>(&self, dim: usize, mut f: F) -> Vec<f64>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut acc = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            f(x, &mut buf);
            for (a, v) in acc.iter_mut().zip(&buf) {
                *a += w * v;
            }
        }
        // first panel: power-law fit through λ₁/4 and λ₁
        let l1 = self.first_end;
        let mut at_end = vec![0.0; dim];
        f(l1, &mut at_end);
        f(0.25 * l1, &mut buf);
        for i in 0..dim {
            let (a, b) = (buf[i], at_end[i]);
            let piece = if a != 0.0 && b != 0.0 && a.signum() == b.signum() {
                let alpha = (b / a).ln() / 4f64.ln();
                if alpha > -0.999 {
                    b * l1 / (1.0 + alpha)
                } else {
                    0.5 * l1 * (a + b)
                }
            } else {
                0.5 * l1 * (a + b)
            };
            acc[i] += piece;
        }
        acc
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.integrate_components(1, |x, out| out[0] = f(x))[0]
    }
}
