//! Data generators for the three simulation scenarios.
//!
//! Each subject draws `Z ~ N(0, I_p)`, a frailty `W`, an event total
//! `m ~ Poisson(Lambda)` with `Lambda = int_0^tau mu(t | Z, W) dt`, and `m`
//! i.i.d. times from `mu / Lambda`. Censoring is `C = min(C*, tau)` with
//! `C* ~ Exp(rate = scale * W)`, and events after `C` are dropped.
//!
//! | scenario | `mu(t \| Z, W)`                              | `tau` |
//! |----------|----------------------------------------------|-------|
//! | M1       | `W f(t, b'Z) exp(g'Z)`, `f` the Beta(2, e^x) density | 1 |
//! | M2       | `3W exp(-t e^x) e^x`, `x = b'Z`              | 2     |
//! | M3       | `W max(0, t^3 + x)`, `x = b'Z`               | 2     |
//!
//! The M3 rate is clamped at zero where `t^3 + x < 0`.
//!
//! Every subject has its own random stream derived from the seed and its
//! index, so output does not depend on thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Subject};
use crate::error::{Error, Result};
use crate::scalar::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    M1,
    M2,
    M3,
}

impl Scenario {
    pub fn default_tau(self) -> f64 {
        match self {
            Scenario::M1 => 1.0,
            Scenario::M2 | Scenario::M3 => 2.0,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(Scenario::M1),
            "M2" => Ok(Scenario::M2),
            "M3" => Ok(Scenario::M3),
            _ => Err(Error::Invalid(format!("unknown scenario `{s}` (valid: M1, M2, M3)"))),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frailty {
    /// `W = 1`.
    DegenerateOne,
    /// `W ~ Gamma(shape 3, scale 1/3)`: mean 1, variance 1/3.
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub beta0: Vec<f64>,
    /// Size direction; must equal `beta0` outside M1.
    pub gamma0: Vec<f64>,
    pub tau: f64,
    pub frailty: Frailty,
    /// Censoring rate per unit frailty. Zero disables censoring (`C = tau`).
    pub censor_rate_scale: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Defaults: `beta0 = (0.8, 0.6)`, `gamma0 = (0.6, 0.8)` for M1 and `beta0`
    /// otherwise, censoring rate `0.1 W`.
    pub fn new(scenario: Scenario, n: usize, frailty: Frailty, seed: u64) -> Self {
        let beta0 = vec![0.8, 0.6];
        let gamma0 = match scenario {
            Scenario::M1 => vec![0.6, 0.8],
            Scenario::M2 | Scenario::M3 => beta0.clone(),
        };
        Self { scenario, n, beta0, gamma0, tau: scenario.default_tau(), frailty, censor_rate_scale: 0.1, seed }
    }

    pub fn p(&self) -> usize {
        self.beta0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("sample size must be positive".into()));
        }
        if self.beta0.is_empty() || self.gamma0.len() != self.beta0.len() {
            return Err(Error::Invalid("beta0 and gamma0 must be non-empty and of equal length".into()));
        }
        if (norm(&self.beta0) - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("beta0 must have unit norm".into()));
        }
        if self.scenario != Scenario::M1 && self.gamma0 != self.beta0 {
            return Err(Error::Invalid(format!("{} ties the size direction to beta0", self.scenario)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Invalid("tau must be positive and finite".into()));
        }
        if self.scenario == Scenario::M1 && self.tau != 1.0 {
            return Err(Error::Invalid("M1 shape density lives on [0, 1]; tau must be 1".into()));
        }
        if !(self.censor_rate_scale >= 0.0 && self.censor_rate_scale.is_finite()) {
            return Err(Error::Invalid("censoring rate scale must be non-negative".into()));
        }
        Ok(())
    }

    /// Ground truth written next to simulated data.
    pub fn truth(&self) -> Truth {
        let g = norm(&self.gamma0);
        Truth {
            scenario: self.scenario,
            beta0: self.beta0.clone(),
            gamma0: self.gamma0.clone(),
            gamma0_normalized: self.gamma0.iter().map(|v| v / g).collect(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub scenario: Scenario,
    pub beta0: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub gamma0_normalized: Vec<f64>,
    pub seed: u64,
}

/// A subject before censoring is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSubject {
    pub z: Vec<f64>,
    pub w: f64,
    pub c: f64,
    /// Event times over the whole window `[0, tau]`, ascending.
    pub full_events: Vec<f64>,
}

/// SplitMix64 finalizer; used to derive independent seeds from `(base, k)`.
pub fn derive_seed(base: u64, k: u64) -> u64 {
    let mut x = base ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Random stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn frailty_draw<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> f64 {
    match spec.frailty {
        Frailty::DegenerateOne => 1.0,
        Frailty::Gamma => Gamma::new(3.0, 1.0 / 3.0).expect("valid gamma law").sample(rng),
    }
}

/// `int_0^2 max(0, t^3 + x) dt`.
fn m3_integral(x: f64) -> f64 {
    if x >= 0.0 {
        return 4.0 + 2.0 * x;
    }
    let t0 = (-x).cbrt();
    if t0 >= 2.0 {
        0.0
    } else {
        (16.0 - t0.powi(4)) / 4.0 + x * (2.0 - t0)
    }
}

/// Expected full-window count `Lambda` given covariates and frailty.
pub fn expected_total(spec: &ScenarioSpec, z: &[f64], w: f64) -> f64 {
    let x = dot(&spec.beta0, z);
    match spec.scenario {
        Scenario::M1 => w * dot(&spec.gamma0, z).exp(),
        Scenario::M2 => 3.0 * w * (-(spec.tau * x.exp())).exp_m1().abs(),
        Scenario::M3 => w * m3_integral(x),
    }
}

fn event_time<R: Rng + ?Sized>(spec: &ScenarioSpec, x: f64, rng: &mut R) -> f64 {
    match spec.scenario {
        Scenario::M1 => Beta::new(2.0, x.exp()).expect("valid beta law").sample(rng),
        Scenario::M2 => {
            let e = x.exp();
            let u: f64 = rng.gen();
            let mass = -(-(spec.tau * e)).exp_m1();
            -(-(u * mass)).ln_1p() / e
        }
        Scenario::M3 => {
            let envelope = spec.tau.powi(3) + x;
            loop {
                let t = rng.gen::<f64>() * spec.tau;
                let v = rng.gen::<f64>() * envelope;
                if v < t.powi(3) + x {
                    return t;
                }
            }
        }
    }
}

/// Draws subject `index`. `z` overrides the covariate draw when given.
pub fn draw_latent(spec: &ScenarioSpec, index: u64, z: Option<&[f64]>) -> LatentSubject {
    let mut rng = stream_rng(spec.seed, index);
    let drawn: Vec<f64> = (0..spec.p()).map(|_| rng.sample(StandardNormal)).collect();
    let z = z.map_or(drawn, <[f64]>::to_vec);
    let w = frailty_draw(spec, &mut rng);
    let c = if spec.censor_rate_scale > 0.0 {
        let c_star: f64 = Exp::new(spec.censor_rate_scale * w).expect("valid exponential law").sample(&mut rng);
        c_star.min(spec.tau)
    } else {
        spec.tau
    };
    let lambda = expected_total(spec, &z, w);
    let m = if lambda > 0.0 { Poisson::new(lambda).expect("valid poisson law").sample(&mut rng) as usize } else { 0 };
    let x = dot(&spec.beta0, &z);
    let mut full_events: Vec<f64> = (0..m).map(|_| event_time(spec, x, &mut rng)).collect();
    full_events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    LatentSubject { z, w, c, full_events }
}

pub fn simulate_dataset(spec: &ScenarioSpec) -> Result<Dataset<f64>> {
    spec.validate()?;
    let width = spec.n.to_string().len();
    let make = |i: usize| {
        let s = draw_latent(spec, i as u64, None);
        let events = s.full_events.into_iter().filter(|&t| t <= s.c).collect();
        Subject::new(format!("{:0width$}", i + 1), s.z, s.c, events)
    };
    let subjects: Vec<Subject<f64>> = if spec.n >= 2048 {
        (0..spec.n).into_par_iter().map(make).collect()
    } else {
        (0..spec.n).map(make).collect()
    };
    Dataset::new(subjects, spec.tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m3_integral_pieces() {
        assert_eq!(m3_integral(0.5), 5.0);
        assert_eq!(m3_integral(-9.0), 0.0);
        // x = -1: int_1^2 (t^3 - 1) dt = 15/4 - 1.
        assert!((m3_integral(-1.0) - 2.75).abs() < 1e-14);
    }

    #[test]
    fn m2_total() {
        let spec = ScenarioSpec::new(Scenario::M2, 1, Frailty::DegenerateOne, 0);
        let lam = expected_total(&spec, &[0.0, 0.0], 1.0);
        assert!((lam - 3.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn invariants_and_determinism() {
        for sc in [Scenario::M1, Scenario::M2, Scenario::M3] {
            let spec = ScenarioSpec::new(sc, 300, Frailty::Gamma, 11);
            let a = simulate_dataset(&spec).unwrap();
            let b = simulate_dataset(&spec).unwrap();
            assert_eq!(a, b);
            for s in a.subjects() {
                assert!(s.c <= spec.tau && s.events.iter().all(|&t| t <= s.c));
                assert!(s.events.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = ScenarioSpec::new(Scenario::M2, 10, Frailty::DegenerateOne, 0);
        spec.gamma0 = vec![0.6, 0.8];
        assert!(spec.validate().is_err());
        assert!("M4".parse::<Scenario>().is_err());
        assert_eq!("m2".parse::<Scenario>().unwrap(), Scenario::M2);
    }

    #[test]
    fn degenerate_frailty() {
        let spec = ScenarioSpec::new(Scenario::M1, 1, Frailty::DegenerateOne, 0);
        let mut rng = stream_rng(1, 2);
        assert!((0..10).all(|_| frailty_draw(&spec, &mut rng) == 1.0));
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|k| derive_seed(42, k)).collect();
        assert_eq!(s.len(), 1000);
    }
}
