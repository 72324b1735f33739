//! Derivative-free local maximization (Nelder-Mead).

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Spread of simplex values at which to stop.
    pub f_tol: f64,
    /// Simplex diameter (max-norm) at which to stop.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 400, f_tol: 1e-7, x_tol: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes `f` from `x0` with an initial simplex of axis steps `step`.
/// Non-finite values are treated as `-inf`.
pub fn nelder_mead_max<T: Real>(
    mut f: impl FnMut(&[T]) -> T,
    x0: &[T],
    step: &[T],
    opts: &NelderMeadOptions,
) -> NelderMeadResult<T> {
    let d = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[T]| {
        evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::neg_infinity()
        }
    };
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] = x[k] + step[k];
        let v = eval(&x);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let f_tol = T::lit(opts.f_tol);
    let x_tol = T::lit(opts.x_tol);
    let mut converged = false;
    let mut iterations = 0;
    let lerp = |a: &[T], b: &[T], t: T| -> Vec<T> { a.iter().zip(b).map(|(&u, &v)| u + t * (v - u)).collect() };

    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let spread = if best.is_finite() && worst.is_finite() { best - worst } else { T::infinity() };
        let diam = simplex[1..].iter().fold(T::zero(), |m, (x, _)| {
            x.iter().zip(&simplex[0].0).fold(m, |m, (&a, &b)| m.max((a - b).abs()))
        });
        if spread <= f_tol && diam <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); d];
        for (x, _) in &simplex[..d] {
            for (c, &v) in centroid.iter_mut().zip(x) {
                *c = *c + v;
            }
        }
        let dn = T::from_count(d);
        centroid.iter_mut().for_each(|c| *c = *c / dn);

        let worst_x = simplex[d].0.clone();
        let xr = lerp(&centroid, &worst_x, -alpha);
        let fr = eval(&xr);
        if fr > simplex[0].1 {
            let xe = lerp(&centroid, &worst_x, -gamma);
            let fe = eval(&xe);
            simplex[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr > simplex[d].1 {
            let xc = lerp(&centroid, &xr, rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = lerp(&centroid, &worst_x, rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc > simplex[d].1.max(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let x = lerp(&best_x, &entry.0, sigma);
            let v = eval(&x);
            *entry = (x, v);
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult { x, value, iterations, evaluations: evals, converged }
}
