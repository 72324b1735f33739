use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TrimSpec};
use crate::error::{Error, Result};
use crate::kernels::{KernelRole, KernelSpec};
use crate::optim::{nelder_mead_max, NelderMeadOptions};
use crate::scalar::Real;

use super::objective::{ObjectiveKind, ShapeObjective};
use super::sphere::{polyspherical_angles, polyspherical_map, sign_normalize, AngleVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Equispaced starting directions when `p = 2`: angles `k pi / grid_points`.
    /// Both objectives are even in `beta`, so these cover the whole circle.
    pub grid_points: usize,
    /// Lattice points per angle over `[0, pi]^(p-1)` when `p > 2`.
    pub lattice_per_axis: usize,
    /// Number of best grid cells refined by the simplex search.
    pub restarts: usize,
    pub nelder_mead: NelderMeadOptions,
    /// Accept kernels outside the shape smoother's rate conditions.
    pub allow_kernel_override: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid_points: 64,
            lattice_per_axis: 5,
            restarts: 3,
            nelder_mead: NelderMeadOptions { max_iter: 400, f_tol: 1e-6, x_tol: 1e-5 },
            allow_kernel_override: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Restart<T = f64> {
    pub start: Vec<T>,
    pub end: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerTrace<T = f64> {
    pub grid_evaluations: usize,
    pub restarts: Vec<Restart<T>>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeDiagnostics {
    pub in_window_events: usize,
    pub skipped_atoms: usize,
    pub clamped_atoms: usize,
    pub floored_rates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeFit<T = f64> {
    /// Unit vector with non-negative last coordinate.
    pub beta: Vec<T>,
    pub alpha: AngleVector<T>,
    pub objective_kind: ObjectiveKind,
    pub objective_value: T,
    pub converged: bool,
    pub diagnostics: ShapeDiagnostics,
    pub kernel: KernelSpec<T>,
    pub trim: TrimSpec<T>,
    pub optimizer_trace: OptimizerTrace<T>,
}

/// Starting angles: a half circle for `p = 2`, a lattice for `p > 2`.
fn start_grid<T: Real>(p: usize, opts: &OptimizerOptions) -> Vec<Vec<T>> {
    if p == 2 {
        let m = opts.grid_points.max(2);
        (0..m).map(|k| vec![T::lit(std::f64::consts::PI * k as f64 / m as f64)]).collect()
    } else {
        let m = opts.lattice_per_axis.max(1);
        let dims = p - 1;
        let total = m.pow(dims as u32);
        (0..total)
            .map(|mut code| {
                (0..dims)
                    .map(|_| {
                        let k = code % m;
                        code /= m;
                        T::lit(std::f64::consts::PI * (k as f64 + 0.5) / m as f64)
                    })
                    .collect()
            })
            .collect()
    }
}

fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Maximizes the chosen objective over directions `beta = S(alpha)`: a grid of
/// starting angles, simplex refinement from the best cells, and the sign flip
/// to a non-negative last coordinate.
pub fn fit_shape<T: Real>(
    ds: &Dataset<T>,
    kernel: &KernelSpec<T>,
    trim: &TrimSpec<T>,
    kind: ObjectiveKind,
    opts: &OptimizerOptions,
) -> Result<ShapeFit<T>> {
    let p = ds.p();
    if p < 2 {
        return Err(Error::Invalid("shape index needs at least two covariates".into()));
    }
    kernel.validate(KernelRole::Shape, opts.allow_kernel_override)?;
    if !ds.is_identifiable() {
        return Err(Error::Unidentifiable);
    }
    let obj = ShapeObjective::new(ds, kernel, trim)?;
    if obj.in_window_events() == 0 {
        return Err(Error::ObjectiveUndefined);
    }
    let value_at = |alpha: &[T]| -> T {
        let beta = polyspherical_map(alpha);
        obj.evaluate(&beta, kind).map(|v| v.value).unwrap_or(T::nan())
    };

    let grid = start_grid::<T>(p, opts);
    let grid_values: Vec<T> = grid.iter().map(|a| value_at(a)).collect();
    let grid_evaluations = grid.len();

    let mut order: Vec<usize> = (0..grid.len()).filter(|&k| grid_values[k].is_finite()).collect();
    if order.is_empty() {
        return Err(Error::NoFiniteSolution("shape objective is not finite at any starting angle".into()));
    }
    order.sort_by(|&a, &b| grid_values[b].partial_cmp(&grid_values[a]).unwrap().then(a.cmp(&b)));
    order.truncate(opts.restarts.max(1));
    let starts = order;

    let step_len = if p == 2 {
        T::lit(std::f64::consts::PI / opts.grid_points.max(2) as f64)
    } else {
        T::lit(std::f64::consts::PI / (2.0 * opts.lattice_per_axis.max(1) as f64))
    };
    let step = vec![step_len; p - 1];
    let mut restarts = Vec::with_capacity(starts.len());
    for &k in &starts {
        let r = nelder_mead_max(value_at, &grid[k], &step, &opts.nelder_mead);
        restarts.push(Restart {
            start: grid[k].clone(),
            end: r.x,
            value: r.value,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
        });
    }

    let best = restarts
        .iter()
        .filter(|r| r.value.is_finite())
        .max_by(|a, b| a.value.partial_cmp(&b.value).unwrap().then_with(|| lex_cmp(&b.end, &a.end)))
        .ok_or_else(|| Error::NoFiniteSolution("simplex search produced no finite value".into()))?;

    let beta = sign_normalize(polyspherical_map(&best.end));
    let alpha = polyspherical_angles(&beta);
    let at_best = obj.evaluate(&beta, kind)?;
    let converged = restarts.iter().any(|r| r.converged);
    let iterations = restarts.iter().map(|r| r.iterations).sum();
    Ok(ShapeFit {
        beta,
        alpha,
        objective_kind: kind,
        objective_value: at_best.value,
        converged,
        diagnostics: ShapeDiagnostics {
            in_window_events: obj.in_window_events(),
            skipped_atoms: at_best.skipped_atoms,
            clamped_atoms: at_best.clamped_atoms,
            floored_rates: at_best.floored_rates,
        },
        kernel: *kernel,
        trim: trim.clone(),
        optimizer_trace: OptimizerTrace { grid_evaluations, restarts, iterations, converged },
    })
}
