//! Pointwise kernel estimators of the reverse-time hazard `r(t, x)` and its
//! tail integral `R(t, x) = int_t^tau1 r(u, x) du` at a fixed shape index
//! direction. These evaluate the defining sums directly and are the reference
//! for the batched evaluation in [`super::objective`].

use serde::Serialize;

use crate::data::{Dataset, TrimSpec};
use crate::kernels::{scaled_with, KernelSpec};
use crate::scalar::Real;

/// Atoms whose local at-risk mass falls below this are dropped from `R`.
pub const DEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Increment {
    Kept,
    /// Denominator below [`DEN_FLOOR`]; contributes nothing.
    Skipped,
    /// Ratio outside `[0, 1]`, pulled back to the nearest end.
    Clamped,
}

/// Jump of `R` at one atom: `num / den`, restricted to `[0, 1]` when `clamp` is set. With a
/// nonnegative kernel the ratio always lies there, since the at-risk mass
/// includes the events at the atom; a signed kernel can push it outside, and
/// near-cancelling denominators would otherwise produce arbitrarily large jumps.
#[inline]
pub(crate) fn atom_increment<T: Real>(num: T, den: T, clamp: bool) -> (T, Increment) {
    if den < T::lit(DEN_FLOOR) {
        return (T::zero(), Increment::Skipped);
    }
    let q = num / den;
    if !clamp {
        (q, Increment::Kept)
    } else if q < T::zero() {
        (T::zero(), Increment::Clamped)
    } else if q > T::one() {
        (T::one(), Increment::Clamped)
    } else {
        (q, Increment::Kept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointEstimate<T = f64> {
    pub value: T,
    /// Atoms skipped because of a degenerate denominator.
    pub skipped_atoms: usize,
    /// Atoms whose jump was clamped into `[0, 1]`.
    pub clamped_atoms: usize,
    /// `true` when the positivity floor `r0` replaced the raw ratio.
    pub floored: bool,
}

fn weights<T: Real>(ds: &Dataset<T>, beta: &[T], x: T, kernel: &KernelSpec<T>, trim: &TrimSpec<T>) -> Vec<T> {
    let h = kernel.bandwidth(ds.n());
    ds.subjects()
        .iter()
        .map(|s| {
            if trim.z_region.contains(&s.z) {
                scaled_with(kernel.family, h, x - crate::scalar::dot(beta, &s.z))
            } else {
                T::zero()
            }
        })
        .collect()
}

fn at_risk<T: Real>(ds: &Dataset<T>, w: &[T], u: T, tau0: T) -> T {
    ds.subjects()
        .iter()
        .zip(w)
        .filter(|(s, _)| s.c >= u)
        .map(|(s, &wj)| wj * T::from_count(s.count_at(u) - s.count_at(tau0)))
        .sum()
}

/// Trimmed estimator of `R(t, x)`: the sum over pooled event atoms
/// `u in (t, tau1]` of kernel-weighted jumps over kernel-weighted at-risk counts,
/// each ratio restricted to `[0, 1]` unless `kernel.clamp_jumps` is off. With the
/// default trim this is the untrimmed estimator.
pub fn estimate_cumulative_reverse_hazard<T: Real>(
    ds: &Dataset<T>,
    beta: &[T],
    x: T,
    t: T,
    kernel: &KernelSpec<T>,
    trim: &TrimSpec<T>,
) -> PointEstimate<T> {
    let w = weights(ds, beta, x, kernel, trim);
    let lower = t.max(trim.tau0);
    let mut atoms: Vec<T> = ds
        .subjects()
        .iter()
        .zip(&w)
        .filter(|(s, _)| trim.z_region.contains(&s.z))
        .flat_map(|(s, _)| s.events.iter().copied())
        .filter(|&u| u > lower && u <= trim.tau1)
        .collect();
    atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    atoms.dedup();

    let mut value = T::zero();
    let mut skipped = 0;
    let mut clamped = 0;
    for u in atoms {
        let num: T = ds
            .subjects()
            .iter()
            .zip(&w)
            .map(|(s, &wj)| wj * T::from_count(s.events.iter().filter(|&&e| e == u).count()))
            .sum();
        if num == T::zero() {
            continue;
        }
        let (inc, status) = atom_increment(num, at_risk(ds, &w, u, trim.tau0), kernel.clamp_jumps);
        match status {
            Increment::Skipped => skipped += 1,
            Increment::Clamped => clamped += 1,
            Increment::Kept => {}
        }
        value = value + inc;
    }
    PointEstimate { value, skipped_atoms: skipped, clamped_atoms: clamped, floored: false }
}

/// Trimmed bivariate kernel estimator of `r(t, x)`, floored at `kernel.r0`.
pub fn estimate_reverse_hazard<T: Real>(
    ds: &Dataset<T>,
    beta: &[T],
    x: T,
    t: T,
    kernel: &KernelSpec<T>,
    trim: &TrimSpec<T>,
) -> PointEstimate<T> {
    let w = weights(ds, beta, x, kernel, trim);
    let h = kernel.bandwidth(ds.n());
    let num: T = ds
        .subjects()
        .iter()
        .zip(&w)
        .map(|(s, &wj)| wj * s.events.iter().map(|&e| scaled_with(kernel.family, h, t - e)).sum::<T>())
        .sum();
    let den = at_risk(ds, &w, t, trim.tau0);
    if den <= T::lit(DEN_FLOOR) {
        return PointEstimate { value: kernel.r0, skipped_atoms: 0, clamped_atoms: 0, floored: true };
    }
    let raw = num / den;
    if raw < kernel.r0 {
        PointEstimate { value: kernel.r0, skipped_atoms: 0, clamped_atoms: 0, floored: true }
    } else {
        PointEstimate { value: raw, skipped_atoms: 0, clamped_atoms: 0, floored: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Subject;

    fn one_subject() -> Dataset<f64> {
        Dataset::new(vec![Subject::new("a", vec![0.3, -0.2], 1.0, vec![0.5])], 1.0).unwrap()
    }

    #[test]
    fn single_subject_cumulative() {
        let ds = one_subject();
        let beta = [0.8, 0.6];
        let x = ds.indices(&beta)[0];
        let k = KernelSpec::shape_default();
        let trim = TrimSpec::untrimmed(1.0);
        let r = estimate_cumulative_reverse_hazard(&ds, &beta, x, 0.2, &k, &trim);
        assert!((r.value - 1.0).abs() < 1e-15);
        let r = estimate_cumulative_reverse_hazard(&ds, &beta, x, 0.7, &k, &trim);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn two_subjects_identical_covariates() {
        let ds = Dataset::new(
            vec![
                Subject::new("a", vec![0.1, 0.4], 1.0, vec![0.3]),
                Subject::new("b", vec![0.1, 0.4], 1.0, vec![0.6]),
            ],
            1.0,
        )
        .unwrap();
        let beta = [0.8, 0.6];
        let x = ds.indices(&beta)[0];
        let k = KernelSpec::shape_default();
        let trim = TrimSpec::untrimmed(1.0);
        // Atom 0.3: mass 1 over at-risk count 1; atom 0.6: mass 1 over count 2.
        let r = estimate_cumulative_reverse_hazard(&ds, &beta, x, 0.2, &k, &trim);
        assert!((r.value - 1.5f64).abs() < 1e-14);
    }

    #[test]
    fn single_atom_rate() {
        let ds = one_subject();
        let beta = [0.8, 0.6];
        let x = ds.indices(&beta)[0];
        let k = KernelSpec::shape_default();
        let r = estimate_reverse_hazard(&ds, &beta, x, 0.5, &k, &TrimSpec::untrimmed(1.0));
        let h = k.bandwidth(1);
        assert!((r.value - 1.845703125 / h).abs() < 1e-13);
    }

    #[test]
    fn rate_floor_far_from_data() {
        let ds = one_subject();
        let beta = [0.8, 0.6];
        let k = KernelSpec::shape_default();
        let r = estimate_reverse_hazard(&ds, &beta, 50.0, 0.5, &k, &TrimSpec::untrimmed(1.0));
        assert!(r.floored);
        assert_eq!(r.value, 1e-6);
    }

    #[test]
    fn symmetric_events_double_numerator() {
        // Events at t - d and t + d: numerator doubles relative to one event at t - d,
        // denominator is N(t) which only sees the earlier event in both cases.
        let beta = [1.0, 0.0];
        let k = KernelSpec::shape_default();
        let trim = TrimSpec::untrimmed(1.0);
        let one = Dataset::new(vec![Subject::new("a", vec![0.0, 0.0], 1.0, vec![0.4])], 1.0).unwrap();
        let two = Dataset::new(vec![Subject::new("a", vec![0.0, 0.0], 1.0, vec![0.4, 0.6])], 1.0).unwrap();
        let r1 = estimate_reverse_hazard(&one, &beta, 0.0, 0.5, &k, &trim);
        let r2 = estimate_reverse_hazard(&two, &beta, 0.0, 0.5, &k, &trim);
        assert!((r2.value - 2.0f64 * r1.value).abs() < 1e-12);
    }
}
