use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Polyspherical angles `alpha` of length `p - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleVector<T = f64>(pub Vec<T>);

impl<T: Real> AngleVector<T> {
    pub fn to_unit(&self) -> Vec<T> {
        polyspherical_map(&self.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len() + 1
    }
}

/// `S(alpha) = (cos a1, sin a1 cos a2, ..., prod sin ak cos a_{p-1}, prod sin ak)`.
pub fn polyspherical_map<T: Real>(alpha: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(alpha.len() + 1);
    let mut prod = T::one();
    for &a in alpha {
        out.push(prod * a.cos());
        prod = prod * a.sin();
    }
    out.push(prod);
    out
}

/// Inverse of [`polyspherical_map`] for a unit vector. Angles lie in `[0, pi]`
/// except the last, which lies in `(-pi, pi]` and falls in `[0, pi]` exactly
/// when the last coordinate is non-negative.
pub fn polyspherical_angles<T: Real>(beta: &[T]) -> AngleVector<T> {
    let p = beta.len();
    let mut alpha = Vec::with_capacity(p.saturating_sub(1));
    for k in 0..p.saturating_sub(1) {
        if k + 2 == p {
            alpha.push(beta[p - 1].atan2(beta[p - 2]));
        } else {
            let tail = beta[k + 1..].iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
            alpha.push(tail.atan2(beta[k]));
        }
    }
    AngleVector(alpha)
}

/// Multiplies by `-1` when the last coordinate is negative.
pub fn sign_normalize<T: Real>(mut beta: Vec<T>) -> Vec<T> {
    if beta.last().is_some_and(|&b| b < T::zero()) {
        beta.iter_mut().for_each(|b| *b = -*b);
    }
    beta
}
