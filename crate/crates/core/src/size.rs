//! Size index estimation.
//!
//! Observed counts are projected onto the full follow-up window by dividing by
//! the estimated cumulative shape `F(C_i) = exp(-R(C_i))` at the fitted shape
//! index. The size index is then estimated either with an exponential link
//! (damped Newton on the estimating equation) or by maximum rank estimation,
//! which needs no link at all.

use serde::Serialize;

use crate::data::{Dataset, TrimSpec, ZRegion};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::optim::{nelder_mead_max, NelderMeadOptions};
use crate::scalar::{dot, norm, solve_dense, Real};
use crate::shape::{estimate_cumulative_reverse_hazard, polyspherical_map, ShapeFit, ShapeObjective};

/// Lower clamp for the estimated cumulative shape.
pub const F_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CumulativeShape<T = f64> {
    pub value: T,
    pub floored: bool,
}

fn clamp_f<T: Real>(r: T) -> CumulativeShape<T> {
    let f = (-r).exp();
    let floor = T::lit(F_FLOOR);
    if !(f >= floor) {
        CumulativeShape { value: floor, floored: true }
    } else {
        CumulativeShape { value: f.min(T::one()), floored: false }
    }
}

/// `exp(-R(t, x))` with the untrimmed estimator of `R`, clamped to `[1e-8, 1]`.
pub fn estimate_cumulative_shape<T: Real>(
    ds: &Dataset<T>,
    beta: &[T],
    x: T,
    t: T,
    kernel: &KernelSpec<T>,
) -> CumulativeShape<T> {
    let r = estimate_cumulative_reverse_hazard(ds, beta, x, t, kernel, &TrimSpec::untrimmed(ds.tau()));
    clamp_f(r.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedCounts<T = f64> {
    /// `N_i(C_i) / F(C_i, x_i)` per subject, in dataset order.
    pub values: Vec<T>,
    pub f_floor_hits: usize,
    /// Atoms dropped or clamped while estimating `R(C_i)`; zero with a nonnegative kernel.
    pub skipped_atoms: usize,
    /// Shape direction the projection was computed at.
    pub shape_beta: Vec<T>,
}

impl<T: Real> ProjectedCounts<T> {
    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_count(self.values.len().max(1))
    }
}

/// Projects every subject's count using the fitted shape direction.
pub fn project_counts<T: Real>(ds: &Dataset<T>, shape: &ShapeFit<T>, kernel: &KernelSpec<T>) -> Result<ProjectedCounts<T>> {
    project_counts_at(ds, &shape.beta, kernel)
}

/// [`project_counts`] at an arbitrary direction. The smoother is always untrimmed.
pub fn project_counts_at<T: Real>(ds: &Dataset<T>, beta: &[T], kernel: &KernelSpec<T>) -> Result<ProjectedCounts<T>> {
    if beta.len() != ds.p() {
        return Err(Error::Invalid(format!("shape direction has length {}, expected {}", beta.len(), ds.p())));
    }
    let eval = ShapeObjective::tails_only(ds, kernel, &TrimSpec::untrimmed(ds.tau()))?;
    let tails = eval.tail_at_censoring(beta);
    let mut values = Vec::with_capacity(ds.n());
    let mut f_floor_hits = 0;
    let mut skipped_atoms = 0;
    for (s, (r, skipped)) in ds.subjects().iter().zip(tails) {
        skipped_atoms += skipped;
        if s.count() == 0 {
            values.push(T::zero());
            continue;
        }
        let f = clamp_f(r);
        f_floor_hits += usize::from(f.floored);
        values.push(T::from_count(s.count()) / f.value);
    }
    Ok(ProjectedCounts { values, f_floor_hits, skipped_atoms, shape_beta: beta.to_vec() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonTrace<T = f64> {
    pub iterations: usize,
    pub step_halvings: usize,
    pub residual_norm: T,
    /// Covariates that are identically zero in the region; their coefficient is fixed at 0.
    pub fixed_coordinates: Vec<usize>,
    pub subjects_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeFitExp<T = f64> {
    pub intercept: T,
    pub gamma: Vec<T>,
    pub normalized_gamma: Vec<T>,
    pub diagnostics: NewtonTrace<T>,
}

const NEWTON_MAX_STEPS: usize = 100;

fn in_region<T: Real>(ds: &Dataset<T>, region: &ZRegion<T>, projected: &ProjectedCounts<T>) -> Result<Vec<usize>> {
    if projected.values.len() != ds.n() {
        return Err(Error::Invalid("projected counts do not match the dataset".into()));
    }
    Ok((0..ds.n())
        .filter(|&i| region.contains(&ds.subjects()[i].z) && projected.values[i].is_finite())
        .collect())
}

/// Solves `sum_i (1, Z_i) {N_i - exp(c + gamma' Z_i)} = 0` over subjects in `region`.
pub fn fit_size_exp<T: Real>(ds: &Dataset<T>, projected: &ProjectedCounts<T>, region: &ZRegion<T>) -> Result<SizeFitExp<T>> {
    let p = ds.p();
    let used = in_region(ds, region, projected)?;
    if used.len() < p + 1 {
        return Err(Error::Invalid(format!("{} subjects in the covariate region, need at least {}", used.len(), p + 1)));
    }
    let y: Vec<T> = used.iter().map(|&i| projected.values[i]).collect();
    let total: T = y.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::NoFiniteSolution("all projected counts are zero; intercept diverges".into()));
    }
    let fixed: Vec<usize> = (0..p).filter(|&k| used.iter().all(|&i| ds.subjects()[i].z[k] == T::zero())).collect();
    let free: Vec<usize> = (0..p).filter(|k| !fixed.contains(k)).collect();
    // Design rows (1, z_free).
    let rows: Vec<Vec<T>> = used
        .iter()
        .map(|&i| {
            let z = &ds.subjects()[i].z;
            std::iter::once(T::one()).chain(free.iter().map(|&k| z[k])).collect()
        })
        .collect();
    let q = free.len() + 1;

    let score = |theta: &[T]| -> (Vec<T>, Vec<T>) {
        let mut u = vec![T::zero(); q];
        let mut mu = Vec::with_capacity(rows.len());
        for (row, &yi) in rows.iter().zip(&y) {
            let m = dot(theta, row).exp();
            mu.push(m);
            let r = yi - m;
            for (uk, &xk) in u.iter_mut().zip(row) {
                *uk = *uk + xk * r;
            }
        }
        (u, mu)
    };
    let tol = T::lit(1e-10).max(T::epsilon() * T::lit(100.0)) * total.max(T::one());

    let mut theta = vec![T::zero(); q];
    theta[0] = (total / T::from_count(y.len())).ln();
    let (mut u, mut mu) = score(&theta);
    let mut res = norm(&u);
    let mut iterations = 0;
    let mut halvings = 0;
    while res > tol {
        if iterations >= NEWTON_MAX_STEPS {
            return Err(Error::NewtonNonConvergence { iterations, residual: res.as_f64() });
        }
        iterations += 1;
        let mut info = vec![vec![T::zero(); q]; q];
        for (row, &m) in rows.iter().zip(&mu) {
            for a in 0..q {
                let ra = row[a] * m;
                for b in 0..q {
                    info[a][b] = info[a][b] + ra * row[b];
                }
            }
        }
        let delta = solve_dense(info, u.clone(), T::epsilon() * T::lit(16.0))
            .ok_or_else(|| Error::NoFiniteSolution("estimating-equation Jacobian is singular".into()))?;
        let mut s = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<T> = theta.iter().zip(&delta).map(|(&t, &d)| t + s * d).collect();
            let (cu, cmu) = score(&cand);
            let cres = norm(&cu);
            if cres.is_finite() && cres < res {
                theta = cand;
                u = cu;
                mu = cmu;
                res = cres;
                accepted = true;
                break;
            }
            s = s * T::lit(0.5);
            halvings += 1;
        }
        if !accepted {
            // No decrease at any step length: the residual is at rounding level.
            if res <= tol * T::lit(1e4) {
                break;
            }
            return Err(Error::NewtonNonConvergence { iterations, residual: res.as_f64() });
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoFiniteSolution("non-finite size coefficients".into()));
    }

    let mut gamma = vec![T::zero(); p];
    for (slot, &k) in free.iter().enumerate() {
        gamma[k] = theta[slot + 1];
    }
    let g_norm = norm(&gamma);
    let normalized_gamma = if g_norm > T::zero() { gamma.iter().map(|&g| g / g_norm).collect() } else { gamma.clone() };
    Ok(SizeFitExp {
        intercept: theta[0],
        gamma,
        normalized_gamma,
        diagnostics: NewtonTrace {
            iterations,
            step_halvings: halvings,
            residual_norm: res,
            fixed_coordinates: fixed,
            subjects_used: used.len(),
        },
    })
}

/// Trimming indicator `|b_par' z| <= a && |b_perp' z| <= a`, where `b_par` is the
/// projection of `beta_hat` on `gamma_tilde` and `b_perp` the rejection. When
/// the two are parallel the rejection vanishes and its condition always holds.
pub fn in_index_slab<T: Real>(z: &[T], beta_hat: &[T], gamma_tilde: &[T], a: T) -> bool {
    let gg = dot(gamma_tilde, gamma_tilde);
    let coef = if gg > T::zero() { dot(gamma_tilde, beta_hat) / gg } else { T::zero() };
    let par: T = dot(gamma_tilde, z) * coef;
    let perp: T = dot(beta_hat, z) - par;
    par.abs() <= a && perp.abs() <= a
}

/// 90th percentile of `|beta' Z_i|`, the default slab half-width.
pub fn default_slab_width<T: Real>(ds: &Dataset<T>, beta: &[T]) -> T {
    let mut x: Vec<T> = ds.indices(beta).into_iter().map(|v| v.abs()).collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = 0.9 * (x.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    x[lo] + (x[hi] - x[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MreMethod {
    /// Exact enumeration of the arcs between pairwise breakpoints (`p = 2`).
    BreakpointSweep,
    /// Multi-start simplex over polyspherical angles (`p > 2`).
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MreTrace {
    pub method: MreMethod,
    /// Breakpoints visited (sweep) or objective evaluations (simplex).
    pub evaluations: usize,
    /// Distinct arcs or restarts attaining the maximum.
    pub tied_optima: usize,
    /// All projected counts equal: every ordering scores the same.
    pub non_identifiable: bool,
    pub subjects_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeFitMre<T = f64> {
    pub gamma: Vec<T>,
    pub objective_value: T,
    pub diagnostics: MreTrace,
}

/// `sum_{i,j} 1(x_i > x_j) w_i` by sorting; ties contribute nothing.
pub fn rank_objective<T: Real>(x: &[T], w: &[T]) -> T {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut total = T::zero();
    let mut k = 0;
    while k < idx.len() {
        let mut e = k;
        while e < idx.len() && x[idx[e]] == x[idx[k]] {
            e += 1;
        }
        let below = T::from_count(k);
        for &i in &idx[k..e] {
            total = total + below * w[i];
        }
        k = e;
    }
    total
}

fn mre_value<T: Real>(z: &[&[T]], w: &[T], gamma: &[T]) -> T {
    let x: Vec<T> = z.iter().map(|zi| dot(gamma, zi)).collect();
    rank_objective(&x, w)
}

/// Maximum rank estimator of the unit size direction over subjects in `region`.
pub fn fit_size_mre<T: Real>(ds: &Dataset<T>, projected: &ProjectedCounts<T>, region: &ZRegion<T>) -> Result<SizeFitMre<T>> {
    let p = ds.p();
    let used = in_region(ds, region, projected)?;
    if used.len() < 2 {
        return Err(Error::Invalid("rank estimation needs at least two subjects in the covariate region".into()));
    }
    let z: Vec<&[T]> = used.iter().map(|&i| ds.subjects()[i].z.as_slice()).collect();
    let w: Vec<T> = used.iter().map(|&i| projected.values[i]).collect();
    let non_identifiable = w.iter().all(|&v| v == w[0]);
    match p {
        1 => {
            let up = mre_value(&z, &w, &[T::one()]);
            let down = mre_value(&z, &w, &[-T::one()]);
            let (gamma, value) = if down > up { (vec![-T::one()], down) } else { (vec![T::one()], up) };
            Ok(SizeFitMre {
                gamma,
                objective_value: value,
                diagnostics: MreTrace {
                    method: MreMethod::BreakpointSweep,
                    evaluations: 2,
                    tied_optima: usize::from(up == down) + 1,
                    non_identifiable,
                    subjects_used: used.len(),
                },
            })
        }
        2 => Ok(mre_sweep(&z, &w, non_identifiable)),
        _ => Ok(mre_simplex(&z, &w, p, non_identifiable)),
    }
}

fn mre_sweep<T: Real>(z: &[&[T]], w: &[T], non_identifiable: bool) -> SizeFitMre<T> {
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let half_pi = T::lit(std::f64::consts::FRAC_PI_2);
    let wrap = |a: T| {
        let r = a % two_pi;
        if r < T::zero() {
            r + two_pi
        } else {
            r
        }
    };
    // Counter-clockwise through `phi + pi/2` subject i drops below j; through
    // `phi - pi/2` it rises above, where phi is the angle of z_i - z_j.
    let mut breaks: Vec<(T, T)> = Vec::new();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let (d0, d1) = (z[i][0] - z[j][0], z[i][1] - z[j][1]);
            if d0 == T::zero() && d1 == T::zero() {
                continue;
            }
            let phi = d1.atan2(d0);
            breaks.push((wrap(phi + half_pi), w[j] - w[i]));
            breaks.push((wrap(phi - half_pi), w[i] - w[j]));
        }
    }
    let unit = |theta: T| vec![theta.cos(), theta.sin()];
    if breaks.is_empty() {
        let gamma = unit(T::zero());
        return SizeFitMre {
            objective_value: mre_value(z, w, &gamma),
            gamma,
            diagnostics: MreTrace {
                method: MreMethod::BreakpointSweep,
                evaluations: 0,
                tied_optima: 1,
                non_identifiable: true,
                subjects_used: z.len(),
            },
        };
    }
    breaks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // Arcs (b_k, b_{k+1}) between distinct breakpoint angles, plus the arc
    // wrapping through zero.
    let mut starts: Vec<T> = Vec::new();
    let mut deltas: Vec<T> = Vec::new();
    for &(angle, d) in &breaks {
        if starts.last() == Some(&angle) {
            let last = deltas.len() - 1;
            deltas[last] = deltas[last] + d;
        } else {
            starts.push(angle);
            deltas.push(d);
        }
    }
    let m = starts.len();
    let arc_end = |k: usize| if k + 1 < m { starts[k + 1] } else { starts[0] + two_pi };
    let mid = |k: usize| wrap((starts[k] + arc_end(k)) / T::lit(2.0));

    // Value on the arc ending at starts[0], i.e. the wrap arc.
    let mut value = mre_value(z, w, &unit(mid(m - 1)));
    let mut values = Vec::with_capacity(m);
    for &d in &deltas {
        value = value + d;
        values.push(value);
    }
    let best = values.iter().copied().fold(T::neg_infinity(), T::max);
    let scale = w.iter().fold(T::zero(), |s, &v| s + v.abs()) * T::from_count(z.len());
    let slack = (T::epsilon() * T::lit(1e4)).max(T::lit(1e-9)) * scale.max(T::one());

    // Re-score near-maximal arcs directly; incremental sums only rank them.
    let mut candidates: Vec<usize> = (0..m).filter(|&k| values[k] >= best - slack && arc_end(k) > starts[k]).collect();
    candidates.truncate(64);
    let mut best_k = candidates.first().copied().unwrap_or(0);
    let mut best_value = T::neg_infinity();
    let mut scored = Vec::with_capacity(candidates.len());
    for &k in &candidates {
        let v = mre_value(z, w, &unit(mid(k)));
        scored.push(v);
        if v > best_value {
            best_value = v;
            best_k = k;
        }
    }
    let tied = scored.iter().filter(|&&v| v == best_value).count().max(1);
    SizeFitMre {
        gamma: unit(mid(best_k)),
        objective_value: best_value,
        diagnostics: MreTrace {
            method: MreMethod::BreakpointSweep,
            evaluations: breaks.len(),
            tied_optima: tied,
            non_identifiable,
            subjects_used: z.len(),
        },
    }
}

const MRE_RESTARTS: usize = 20;

fn mre_simplex<T: Real>(z: &[&[T]], w: &[T], p: usize, non_identifiable: bool) -> SizeFitMre<T> {
    let dims = p - 1;
    let mut evaluations = 0;
    let opts = NelderMeadOptions { max_iter: 300, f_tol: 0.0, x_tol: 1e-6 };
    let mut results: Vec<(Vec<T>, T)> = Vec::with_capacity(MRE_RESTARTS);
    // Halton starts on [0, pi]^(p-2) x [0, 2pi).
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for r in 0..MRE_RESTARTS {
        let start: Vec<T> = (0..dims)
            .map(|k| {
                let base = PRIMES[k % PRIMES.len()];
                let (mut f, mut v, mut idx) = (1.0, 0.0, r as u64 + 1);
                while idx > 0 {
                    f /= base as f64;
                    v += f * (idx % base) as f64;
                    idx /= base;
                }
                let range = if k + 1 == dims { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
                T::lit(v * range)
            })
            .collect();
        let step = vec![T::lit(std::f64::consts::FRAC_PI_4); dims];
        let res = nelder_mead_max(|a: &[T]| mre_value(z, w, &polyspherical_map(a)), &start, &step, &opts);
        evaluations += res.evaluations;
        results.push((polyspherical_map(&res.x), res.value));
    }
    let best_value = results.iter().map(|r| r.1).fold(T::neg_infinity(), T::max);
    let tied = results.iter().filter(|r| r.1 == best_value).count();
    let gamma = results.into_iter().find(|r| r.1 == best_value).map(|r| r.0).unwrap_or_default();
    SizeFitMre {
        gamma,
        objective_value: best_value,
        diagnostics: MreTrace {
            method: MreMethod::Simplex,
            evaluations,
            tied_optima: tied,
            non_identifiable,
            subjects_used: z.len(),
        },
    }
}

/// Either size estimator, tagged by link in serialized form.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "link", rename_all = "lowercase")]
pub enum SizeFit<T = f64> {
    Exp(SizeFitExp<T>),
    Mre(SizeFitMre<T>),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Subject;

    fn pair_fixture() -> Dataset<f64> {
        Dataset::new(
            vec![
                Subject::new("a", vec![0.1, 0.4], 1.0, vec![0.3]),
                Subject::new("b", vec![0.1, 0.4], 1.0, vec![0.6]),
            ],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn cumulative_shape_two_subjects() {
        let ds = pair_fixture();
        let beta = [0.8, 0.6];
        let x = ds.indices(&beta)[0];
        let f = estimate_cumulative_shape(&ds, &beta, x, 0.5, &KernelSpec::size_default());
        assert!((f.value - 0.606_530_659_712_633_4).abs() < 1e-15);
        let f = estimate_cumulative_shape(&ds, &beta, x, 1.0, &KernelSpec::size_default());
        assert_eq!(f.value, 1.0);
    }

    #[test]
    fn cumulative_shape_floor() {
        assert_eq!(clamp_f(40.0f64), CumulativeShape { value: 1e-8, floored: true });
        assert_eq!(clamp_f(-0.5f64).value, 1.0);
    }

    #[test]
    fn projection_at_horizon_is_raw() {
        let ds = Dataset::new(vec![Subject::new("a", vec![0.3, -0.2], 1.0, vec![0.5])], 1.0).unwrap();
        let pc = project_counts_at(&ds, &[0.8, 0.6], &KernelSpec::size_default()).unwrap();
        assert_eq!(pc.values, vec![1.0]);
    }

    #[test]
    fn projection_matches_pointwise_estimator() {
        let ds = Dataset::new(
            vec![
                Subject::new("a", vec![0.1, 0.4], 0.7, vec![0.3, 0.5]),
                Subject::new("b", vec![0.2, 0.3], 1.0, vec![0.6, 0.8]),
                Subject::new("c", vec![-0.1, 0.2], 0.4, vec![]),
                Subject::new("d", vec![0.0, 0.5], 0.9, vec![0.75]),
            ],
            1.0,
        )
        .unwrap();
        let beta = [0.6, 0.8];
        let k = KernelSpec::size_default();
        let pc = project_counts_at(&ds, &beta, &k).unwrap();
        for (s, &v) in ds.subjects().iter().zip(&pc.values) {
            let x = dot(&beta, &s.z);
            let f = estimate_cumulative_shape(&ds, &beta, x, s.c, &k).value;
            assert!((v - s.count() as f64 / f).abs() < 1e-12);
            assert!(v >= s.count() as f64);
        }
        assert_eq!(pc.values[2], 0.0);
    }

    #[test]
    fn index_slab_examples() {
        assert!(in_index_slab(&[0.5, 3.0], &[1.0, 0.0], &[1.0, 0.0], 1.0));
        assert!(!in_index_slab(&[2.0, 0.1], &[1.0, 0.0], &[0.0, 1.0], 1.0));
        // Projection coefficient 0.96, index 0.96 * 1.4 = 1.344.
        assert!(!in_index_slab(&[1.0, 1.0], &[0.8, 0.6], &[0.6, 0.8], 1.2));
        assert!(in_index_slab(&[1.0, 1.0], &[0.8, 0.6], &[0.6, 0.8], 1.4));
    }

    #[test]
    fn rank_objective_ties() {
        assert_eq!(rank_objective(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 8.0);
        assert_eq!(rank_objective(&[1.0, 1.0, 3.0], &[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn mre_three_points() {
        let ds = Dataset::new(
            vec![
                Subject::new("a", vec![1.0, 0.0], 1.0, vec![]),
                Subject::new("b", vec![2.0, 0.0], 1.0, vec![]),
                Subject::new("c", vec![3.0, 0.0], 1.0, vec![]),
            ],
            1.0,
        )
        .unwrap();
        let pc = ProjectedCounts { values: vec![1.0, 2.0, 3.0], f_floor_hits: 0, skipped_atoms: 0, shape_beta: vec![1.0, 0.0] };
        let fit = fit_size_mre(&ds, &pc, &ZRegion::All).unwrap();
        assert_eq!(fit.objective_value, 8.0);
        assert!(fit.gamma[0] > 0.0);
        assert!((norm(&fit.gamma) - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn exp_fit_zero_column() {
        let subjects = (0..20)
            .map(|i| {
                let z1 = (i as f64 - 10.0) / 7.0;
                let k = [0, 1, 2, 1, 3, 0, 2, 4, 1, 2][i % 10];
                Subject::new(i.to_string(), vec![z1, 0.0], 1.0, (0..k).map(|e| 0.1 + 0.1 * e as f64).collect())
            })
            .collect();
        let ds = Dataset::new(subjects, 1.0).unwrap();
        let pc = ProjectedCounts {
            values: ds.subjects().iter().map(|s| s.count() as f64).collect(),
            f_floor_hits: 0,
            skipped_atoms: 0,
            shape_beta: vec![1.0, 0.0],
        };
        let fit = fit_size_exp(&ds, &pc, &ZRegion::All).unwrap();
        assert_eq!(fit.gamma[1], 0.0);
        assert_eq!(fit.diagnostics.fixed_coordinates, vec![1]);
        assert!(fit.diagnostics.residual_norm < 1e-8);
    }

    #[test]
    fn exp_fit_all_zero_counts() {
        let ds = Dataset::new(
            (0..5).map(|i| Subject::new(i.to_string(), vec![i as f64, 1.0 - i as f64 * 0.3], 1.0, vec![])).collect(),
            1.0,
        )
        .unwrap();
        let pc = ProjectedCounts { values: vec![0.0; 5], f_floor_hits: 0, skipped_atoms: 0, shape_beta: vec![1.0, 0.0] };
        assert!(matches!(fit_size_exp(&ds, &pc, &ZRegion::All), Err(Error::NoFiniteSolution(_))));
    }
}
