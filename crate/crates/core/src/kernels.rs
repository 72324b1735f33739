//! Kernel functions and bandwidth rules.
//!
//! Two families are provided, both supported on `[-1, 1]`:
//!
//! * `Quartic4`: the fourth-order kernel `315 (3 - 11u^2)(1 - u^2)^3 / 512`,
//!   used by the shape smoothers. It takes negative values near `|u| = 1`.
//! * `Epanechnikov`: `3 (1 - u^2) / 4`, second order, used for the
//!   cumulative-shape smoother behind the size estimators.
//!
//! Bandwidths follow `h = a1 * n^(-a2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Quartic4,
    Epanechnikov,
}

impl KernelFamily {
    pub fn order(self) -> u32 {
        match self {
            KernelFamily::Quartic4 => 4,
            KernelFamily::Epanechnikov => 2,
        }
    }
}

/// What a kernel is being used for; determines the admissible bandwidth exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRole {
    /// Shape smoothers: fourth-order kernel, `1/8 < a2 < 1/6`.
    Shape,
    /// Size smoother: second-order kernel, `1/4 < a2 < 1/2`.
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T = f64> {
    pub family: KernelFamily,
    pub a1: T,
    pub a2: T,
    /// Positivity floor applied to density-like estimates built on this kernel.
    pub r0: T,
    /// Restrict each jump of the cumulative estimator to `[0, 1]`. Only matters
    /// for kernels that take negative values.
    #[serde(default = "clamp_default")]
    pub clamp_jumps: bool,
}

fn clamp_default() -> bool {
    true
}

impl<T: Real> KernelSpec<T> {
    /// Fourth-order kernel with `h = n^(-2/15)` and `r0 = 1e-6`.
    pub fn shape_default() -> Self {
        Self { family: KernelFamily::Quartic4, a1: T::one(), a2: T::lit(2.0 / 15.0), r0: T::lit(1e-6), clamp_jumps: true }
    }

    /// Epanechnikov kernel with `h = n^(-2/7)`.
    pub fn size_default() -> Self {
        Self { family: KernelFamily::Epanechnikov, a1: T::one(), a2: T::lit(2.0 / 7.0), r0: T::lit(1e-6), clamp_jumps: true }
    }

    /// Checks family/exponent against the role's rate conditions. `allow_override`
    /// skips the order and exponent checks but never the positivity of `a1`.
    pub fn validate(&self, role: KernelRole, allow_override: bool) -> Result<()> {
        if !(self.a1 > T::zero()) || !self.a1.is_finite() {
            return Err(Error::Invalid(format!("bandwidth multiplier a1 must be positive, got {}", self.a1)));
        }
        if !(self.r0 > T::zero()) {
            return Err(Error::Invalid(format!("positivity floor r0 must be positive, got {}", self.r0)));
        }
        if allow_override {
            return Ok(());
        }
        let (family, lo, hi) = match role {
            KernelRole::Shape => (KernelFamily::Quartic4, 1.0 / 8.0, 1.0 / 6.0),
            KernelRole::Size => (KernelFamily::Epanechnikov, 1.0 / 4.0, 1.0 / 2.0),
        };
        if self.family != family {
            return Err(Error::Invalid(format!("{role:?} smoother expects the {family:?} kernel")));
        }
        let a2 = self.a2.as_f64();
        if !(lo < a2 && a2 < hi) {
            return Err(Error::Invalid(format!("{role:?} bandwidth exponent a2 = {a2} outside ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn bandwidth(&self, n: usize) -> T {
        self.a1 * T::from_count(n.max(1)).powf(-self.a2)
    }

    /// `K(u)`; exactly zero for `|u| >= 1`.
    #[inline]
    pub fn eval(&self, u: T) -> T {
        kernel_eval(self.family, u)
    }

    /// `K_h(u) = K(u / h) / h` with `h` from the bandwidth rule at sample size `n`.
    pub fn scaled(&self, n: usize, u: T) -> T {
        let h = self.bandwidth(n);
        self.eval(u / h) / h
    }
}

#[inline]
pub fn kernel_eval<T: Real>(family: KernelFamily, u: T) -> T {
    let a = u.abs();
    if a >= T::one() {
        return T::zero();
    }
    let u2 = u * u;
    let w = T::one() - u2;
    match family {
        KernelFamily::Quartic4 => {
            T::lit(315.0 / 512.0) * (T::lit(3.0) - T::lit(11.0) * u2) * w * w * w
        }
        KernelFamily::Epanechnikov => T::lit(0.75) * w,
    }
}

/// Scaled kernel evaluated with an explicit bandwidth.
#[inline]
pub(crate) fn scaled_with<T: Real>(family: KernelFamily, h: T, u: T) -> T {
    kernel_eval(family, u / h) / h
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(m0, ..., m4)` with `mk = int u^k K(u) du` over `[-1, 1]`.
///
/// Both kernels are polynomials on their support, so a 16-point Gauss-Legendre
/// rule integrates every moment up to `k = 4` exactly (degree <= 12).
pub fn kernel_moments<T: Real>(family: KernelFamily) -> [T; 5] {
    let rule = gauss_legendre(16);
    let mut m = [0.0f64; 5];
    for &(x, w) in &rule {
        let k = kernel_eval::<f64>(family, x) * w;
        let mut xp = 1.0;
        for mk in m.iter_mut() {
            *mk += xp * k;
            xp *= x;
        }
    }
    m.map(T::lit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_eval(KernelFamily::Quartic4, 0.0f64), 1.845703125);
        assert_eq!(kernel_eval(KernelFamily::Epanechnikov, 0.0f64), 0.75);
        assert_eq!(kernel_eval(KernelFamily::Quartic4, 1.2f64), 0.0);
        assert_eq!(kernel_eval(KernelFamily::Quartic4, 1.0f64), 0.0);
        assert_eq!(kernel_eval(KernelFamily::Epanechnikov, -1.0f32), 0.0);
        assert!(kernel_eval(KernelFamily::Quartic4, 0.9f64) < 0.0);
    }

    #[test]
    fn scaled_kernel_values() {
        // K(0)/h, with h from a 40-digit evaluation of n^(-a2).
        let q = KernelSpec::<f64>::shape_default();
        assert!((q.bandwidth(200) - 0.493_396_427_474_813_8).abs() < 1e-14);
        assert!((q.scaled(200, 0.0) - 3.740_811_692_630_702_5).abs() < 1e-12);
        let e = KernelSpec::<f64>::size_default();
        assert!((e.scaled(400, 0.0) - 4.154_387_235_458_064).abs() < 1e-12);
        let h = e.bandwidth(400);
        assert_eq!(e.scaled(400, 2.0 * h), 0.0);
    }

    #[test]
    fn moments() {
        let m: [f64; 5] = kernel_moments(KernelFamily::Quartic4);
        assert!((m[0] - 1.0).abs() < 1e-13);
        for k in 1..4 {
            assert!(m[k].abs() < 1e-13, "m{k} = {}", m[k]);
        }
        assert!((m[4] + 3.0 / 143.0).abs() < 1e-13);
        let m: [f64; 5] = kernel_moments(KernelFamily::Epanechnikov);
        assert!((m[0] - 1.0).abs() < 1e-13);
        assert!((m[2] - 0.2).abs() < 1e-13);
        assert!(m[1].abs() < 1e-13 && m[3].abs() < 1e-13);
    }

    #[test]
    fn validation() {
        let mut q = KernelSpec::<f64>::shape_default();
        q.validate(KernelRole::Shape, false).unwrap();
        assert!(q.validate(KernelRole::Size, false).is_err());
        q.a2 = 0.2;
        assert!(q.validate(KernelRole::Shape, false).is_err());
        q.validate(KernelRole::Shape, true).unwrap();
        KernelSpec::<f64>::size_default().validate(KernelRole::Size, false).unwrap();
    }

    proptest! {
        #[test]
        fn kernels_are_even(u in -2.0f64..2.0) {
            for fam in [KernelFamily::Quartic4, KernelFamily::Epanechnikov] {
                prop_assert_eq!(kernel_eval(fam, u), kernel_eval(fam, -u));
            }
        }
    }
}
