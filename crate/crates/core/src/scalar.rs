use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the estimators: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the target type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves the dense system `a x = b` in place by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `tol` times the
/// largest absolute entry.
pub(crate) fn solve_dense<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>, tol: T) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[pivot][col].abs() <= tol * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - factor * v;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let s = (row + 1..n).fold(b[row], |acc, k| acc - a[row][k] * x[k]);
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Numerical rank of a symmetric positive semidefinite matrix, by elimination
/// with a relative pivot threshold.
pub(crate) fn psd_rank<T: Real>(mut a: Vec<Vec<T>>, rel_tol: T) -> usize {
    let n = a.len();
    let scale = (0..n).fold(T::zero(), |m, i| m.max(a[i][i].abs()));
    if scale == T::zero() {
        return 0;
    }
    let mut rank = 0;
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut best = None;
        for i in 0..n {
            if !used[i] && best.map_or(true, |b: usize| a[i][i] > a[b][b]) {
                best = Some(i);
            }
        }
        let Some(k) = best else { break };
        if a[k][k] <= rel_tol * scale {
            break;
        }
        used[k] = true;
        rank += 1;
        let pivot = a[k][k];
        let row_k = a[k].clone();
        for i in 0..n {
            if used[i] {
                continue;
            }
            let f = a[i][k] / pivot;
            for j in 0..n {
                a[i][j] = a[i][j] - f * row_k[j];
            }
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(a, vec![1.0, 2.0], 1e-14).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_rejected() {
        let a = vec![vec![1.0f64, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(a, vec![1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn rank_of_projector() {
        let a = vec![vec![1.0f64, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]];
        assert_eq!(psd_rank(a, 1e-12), 2);
        assert_eq!(psd_rank(vec![vec![0.0f32; 2]; 2], 1e-6), 0);
    }
}
