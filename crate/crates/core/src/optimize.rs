//! Nelder–Mead on a box, with trial points projected onto the box.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop once the largest vertex distance from the best vertex falls below this.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions { diameter_tol: 1e-7, max_evals: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Minimise `f` over `[lo, hi]` from `start` with initial edge lengths `step`.
/// Coordinates with `lo == hi` are held fixed. Projection can flatten the
/// simplex against a wall, so the search restarts from its best point until a
/// restart no longer improves it.
pub fn nelder_mead<F>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    const MAX_RESTARTS: usize = 6;
    let mut best = simplex_search(&mut f, start, step, lo, hi, opts);
    for _ in 0..MAX_RESTARTS {
        if best.evals >= opts.max_evals {
            break;
        }
        let budget = NelderMeadOptions { max_evals: opts.max_evals - best.evals, ..opts };
        let next = simplex_search(&mut f, &best.x, step, lo, hi, budget);
        let evals = best.evals + next.evals;
        let moved = next.x.iter().zip(&best.x).any(|(a, b)| (a - b).abs() >= opts.diameter_tol);
        if next.value < best.value {
            best = NelderMeadResult { evals, ..next };
            if !moved {
                break;
            }
        } else {
            best.evals = evals;
            best.converged = best.converged && next.converged;
            break;
        }
    }
    best
}

fn simplex_search<F>(
    f: &mut F,
    start: &[f64],
    step: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: NelderMeadOptions,
) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let free: Vec<usize> = (0..start.len()).filter(|&i| hi[i] > lo[i]).collect();
    let mut x0 = start.to_vec();
    project(&mut x0, lo, hi);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if free.is_empty() {
        let value = eval(&x0, &mut evals);
        return NelderMeadResult { x: x0, value, evals, converged: true };
    }

    let mut simplex = vec![x0.clone()];
    for &i in &free {
        let mut v = x0.clone();
        // step away from the nearer wall so the vertex stays distinct
        let s = step[i].abs().max(1e-12);
        v[i] = if x0[i] + s <= hi[i] { x0[i] + s } else { x0[i] - s };
        project(&mut v, lo, hi);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    let dim = free.len();
    let mut converged = false;
    while evals < opts.max_evals {
        // order; stable sort keeps earlier vertices first on ties
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; x0.len()];
        for v in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect();
            project(&mut p, lo, hi);
            p
        };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
            continue;
        }
        // outside contraction if the reflection helped at all, inside otherwise
        let xc = along(if fr < values[dim] { 0.5 } else { -0.5 });
        let fc = eval(&xc, &mut evals);
        if fc < values[dim].min(fr) {
            simplex[dim] = xc;
            values[dim] = fc;
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].clone();
        for i in 1..=dim {
            let mut p: Vec<f64> = simplex[i].iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
            project(&mut p, lo, hi);
            values[i] = eval(&p, &mut evals);
            simplex[i] = p;
        }
    }

    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    NelderMeadResult { x: simplex[best].clone(), value: values[best], evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.1, 0.1],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            NelderMeadOptions { diameter_tol: 1e-10, max_evals: 5000 },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn minimum_on_the_boundary() {
        let r = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + (x[1] + 0.5).powi(2),
            &[0.0, 0.0],
            &[0.2, 0.2],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-7);
        assert!((r.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn fixed_coordinate() {
        let r = nelder_mead(
            |x| (x[0] - 0.3).powi(2) + (x[1] - 2.0).powi(2),
            &[0.5, 0.0],
            &[0.1, 0.1],
            &[0.5, -10.0],
            &[0.5, 10.0],
            NelderMeadOptions::default(),
        );
        assert!(r.converged);
        assert_eq!(r.x[0], 0.5);
        assert!((r.x[1] - 2.0).abs() < 1e-7);
    }
}
