//! Bootstrap standard errors and Monte Carlo aggregation.
//!
//! Estimators are run through a shared pipeline so that one resample feeds
//! every requested estimator: the simplified-objective shape fit is computed
//! once and reused by the shape bootstrap and, by default, by the size
//! estimators. Replicate `r` of a bootstrap draws its resample from stream `r`
//! of the seeded generator, so results do not depend on scheduling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TrimSpec, ZRegion};
use crate::error::{Error, Result};
use crate::kernels::{KernelRole, KernelSpec};
use crate::scalar::Real;
use crate::shape::{fit_shape, ObjectiveKind, OptimizerOptions, ShapeFit};
use crate::simulate::{derive_seed, simulate_dataset, stream_rng, ScenarioSpec};
use crate::size::{
    default_slab_width, fit_size_exp, fit_size_mre, project_counts, ProjectedCounts, SizeFitExp, SizeFitMre,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Shape direction maximizing the simplified objective.
    ShapeSimplified,
    /// Shape direction maximizing the full objective.
    ShapeFull,
    SizeExp,
    SizeMre,
}

impl Estimator {
    pub const ALL: [Estimator; 4] =
        [Estimator::ShapeSimplified, Estimator::ShapeFull, Estimator::SizeExp, Estimator::SizeMre];

    pub fn is_shape(self) -> bool {
        matches!(self, Estimator::ShapeSimplified | Estimator::ShapeFull)
    }

    /// Names of the entries of [`PipelineFits::params`].
    pub fn parameter_names(self, p: usize) -> Vec<String> {
        match self {
            Estimator::ShapeSimplified | Estimator::ShapeFull => (1..=p).map(|k| format!("beta{k}")).collect(),
            Estimator::SizeExp => std::iter::once("intercept".to_string())
                .chain((1..=p).map(|k| format!("gamma{k}")))
                .chain((1..=p).map(|k| format!("gamma{k}_normalized")))
                .collect(),
            Estimator::SizeMre => (1..=p).map(|k| format!("gamma{k}")).collect(),
        }
    }

    /// Parameter indices reported in Monte Carlo tables: the unit-scale ones.
    pub fn table_parameters(self, p: usize) -> Vec<usize> {
        match self {
            Estimator::SizeExp => (p + 1..=2 * p).collect(),
            _ => (0..p).collect(),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Estimator::ShapeSimplified => "shape_simplified",
            Estimator::ShapeFull => "shape_full",
            Estimator::SizeExp => "size_exp",
            Estimator::SizeMre => "size_mre",
        };
        f.write_str(s)
    }
}

/// Covariate region for the size estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SizeRegion {
    #[default]
    All,
    /// Slab around the fitted shape and a preliminary rank-estimated size
    /// direction; `a` defaults to the 90th percentile of `|beta' Z|`.
    IndexSlab { a: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct PipelineConfig<T = f64> {
    pub shape_kernel: KernelSpec<T>,
    pub size_kernel: KernelSpec<T>,
    /// Trimming for the shape objectives; `None` means untrimmed.
    pub trim: Option<TrimSpec<T>>,
    pub optimizer: OptimizerOptions,
    /// Objective behind the shape fit that the size estimators project with.
    pub size_shape_objective: ObjectiveKind,
    pub size_region: SizeRegion,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            shape_kernel: KernelSpec::shape_default(),
            size_kernel: KernelSpec::size_default(),
            trim: None,
            optimizer: OptimizerOptions::default(),
            size_shape_objective: ObjectiveKind::Simplified,
            size_region: SizeRegion::All,
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    pub fn trim_for(&self, ds: &Dataset<T>) -> TrimSpec<T> {
        self.trim.clone().unwrap_or_else(|| TrimSpec::untrimmed(ds.tau()))
    }

    pub fn validate(&self) -> Result<()> {
        let allow = self.optimizer.allow_kernel_override;
        self.shape_kernel.validate(KernelRole::Shape, allow)?;
        self.size_kernel.validate(KernelRole::Size, allow)
    }
}

fn dup(e: &Error) -> Error {
    match e {
        Error::Unidentifiable => Error::Unidentifiable,
        Error::ObjectiveUndefined => Error::ObjectiveUndefined,
        Error::NoFiniteSolution(s) => Error::NoFiniteSolution(s.clone()),
        Error::NewtonNonConvergence { iterations, residual } => {
            Error::NewtonNonConvergence { iterations: *iterations, residual: *residual }
        }
        other => Error::Invalid(other.to_string()),
    }
}

/// Everything the requested estimators needed on one dataset.
#[derive(Debug)]
pub struct PipelineFits<T: Real = f64> {
    pub shape_simplified: Option<Result<ShapeFit<T>>>,
    pub shape_full: Option<Result<ShapeFit<T>>>,
    pub projected: Option<Result<ProjectedCounts<T>>>,
    /// Region the size estimators were fitted on.
    pub size_region: Option<ZRegion<T>>,
    pub size_exp: Option<Result<SizeFitExp<T>>>,
    pub size_mre: Option<Result<SizeFitMre<T>>>,
}

impl<T: Real> PipelineFits<T> {
    fn shape(&self, kind: ObjectiveKind) -> Result<&ShapeFit<T>> {
        let slot = match kind {
            ObjectiveKind::Simplified => &self.shape_simplified,
            ObjectiveKind::Full => &self.shape_full,
        };
        match slot {
            Some(Ok(f)) => Ok(f),
            Some(Err(e)) => Err(dup(e)),
            None => Err(Error::Invalid("shape fit not computed".into())),
        }
    }

    /// Parameter vector of `est`; see [`Estimator::parameter_names`].
    pub fn params(&self, est: Estimator) -> Result<Vec<T>> {
        let missing = || Error::Invalid(format!("{est} not computed"));
        match est {
            Estimator::ShapeSimplified => Ok(self.shape(ObjectiveKind::Simplified)?.beta.clone()),
            Estimator::ShapeFull => Ok(self.shape(ObjectiveKind::Full)?.beta.clone()),
            Estimator::SizeExp => match self.size_exp.as_ref().ok_or_else(missing)? {
                Ok(f) => Ok(std::iter::once(f.intercept)
                    .chain(f.gamma.iter().copied())
                    .chain(f.normalized_gamma.iter().copied())
                    .collect()),
                Err(e) => Err(dup(e)),
            },
            Estimator::SizeMre => match self.size_mre.as_ref().ok_or_else(missing)? {
                Ok(f) => Ok(f.gamma.clone()),
                Err(e) => Err(dup(e)),
            },
        }
    }
}

/// Fits the requested estimators on `ds`, sharing intermediate fits.
pub fn run_pipeline<T: Real>(ds: &Dataset<T>, estimators: &[Estimator], config: &PipelineConfig<T>) -> PipelineFits<T> {
    let trim = config.trim_for(ds);
    let wants = |e: Estimator| estimators.contains(&e);
    let need_size = wants(Estimator::SizeExp) || wants(Estimator::SizeMre);
    let size_kind = config.size_shape_objective;
    let need_simplified = wants(Estimator::ShapeSimplified) || (need_size && size_kind == ObjectiveKind::Simplified);
    let need_full = wants(Estimator::ShapeFull) || (need_size && size_kind == ObjectiveKind::Full);
    let fit = |kind| fit_shape(ds, &config.shape_kernel, &trim, kind, &config.optimizer);

    let mut out = PipelineFits {
        shape_simplified: need_simplified.then(|| fit(ObjectiveKind::Simplified)),
        shape_full: need_full.then(|| fit(ObjectiveKind::Full)),
        projected: None,
        size_region: None,
        size_exp: None,
        size_mre: None,
    };
    if !need_size {
        return out;
    }
    let projected = out.shape(size_kind).and_then(|s| project_counts(ds, s, &config.size_kernel));
    let region = match (&projected, config.size_region) {
        (Err(_), _) => None,
        (Ok(_), SizeRegion::All) => Some(Ok(ZRegion::All)),
        (Ok(pc), SizeRegion::IndexSlab { a }) => {
            let beta = pc.shape_beta.clone();
            let a = a.map_or_else(|| default_slab_width(ds, &beta), T::lit);
            Some(fit_size_mre(ds, pc, &ZRegion::All).map(|pre| ZRegion::IndexSlab { beta, gamma: pre.gamma, a }))
        }
    };
    match (&projected, region.as_ref()) {
        (Ok(pc), Some(Ok(region))) => {
            if wants(Estimator::SizeExp) {
                out.size_exp = Some(fit_size_exp(ds, pc, region));
            }
            if wants(Estimator::SizeMre) {
                out.size_mre = Some(fit_size_mre(ds, pc, region));
            }
            out.size_region = Some(region.clone());
        }
        (Ok(_), Some(Err(e))) | (Err(e), _) => {
            if wants(Estimator::SizeExp) {
                out.size_exp = Some(Err(dup(e)));
            }
            if wants(Estimator::SizeMre) {
                out.size_mre = Some(Err(dup(e)));
            }
        }
        (Ok(_), None) => unreachable!("region is computed whenever projection succeeds"),
    }
    out.projected = Some(projected);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BootstrapOptions {
    /// Worker threads; `None` uses the global pool. Output is identical either way.
    pub workers: Option<usize>,
    /// Also report percentile intervals.
    pub percentile: bool,
    /// Test hook: every replicate uses the original sample unchanged.
    #[serde(skip)]
    pub identity_resample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult<T = f64> {
    pub estimator: Estimator,
    pub parameter_names: Vec<String>,
    /// Full-data estimate the intervals are centered on.
    pub point: Vec<T>,
    /// Kept replicate estimates, one row per replicate, in replicate order.
    pub estimates: Vec<Vec<T>>,
    pub se: Vec<T>,
    /// Normal-approximation 95% intervals `point +/- 1.96 se`.
    pub ci: Vec<(T, T)>,
    pub percentile_ci: Option<Vec<(T, T)>>,
    pub b: usize,
    pub dropped: usize,
    pub seed: u64,
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Estimator that a bootstrap replicate refits: the shape bootstrap always
/// uses the simplified objective.
fn replicate_estimator(est: Estimator) -> Estimator {
    if est == Estimator::ShapeFull {
        Estimator::ShapeSimplified
    } else {
        est
    }
}

fn sorted_sum<T: Real>(v: &[T]) -> T {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    s.into_iter().fold(T::zero(), |a, b| a + b)
}

/// Mean and (n - 1)-denominator standard deviation, independent of input order.
fn mean_sd<T: Real>(v: &[T]) -> (T, Option<T>) {
    let n = T::from_count(v.len());
    let mean = sorted_sum(v) / n;
    if v.len() < 2 {
        return (mean, None);
    }
    let dev: Vec<T> = v.iter().map(|&x| (x - mean) * (x - mean)).collect();
    (mean, Some((sorted_sum(&dev) / (n - T::one())).sqrt()))
}

fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * T::lit(pos - lo as f64)
}

/// Subject indices of bootstrap replicate `r`: `n` draws with replacement from stream `r`.
pub fn resample_indices(seed: u64, r: usize, n: usize) -> Vec<usize> {
    let mut rng = stream_rng(seed, r as u64);
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Point estimate and bootstrap for one estimator. See [`bootstrap_many`].
pub fn bootstrap<T: Real>(
    ds: &Dataset<T>,
    estimator: Estimator,
    b: usize,
    seed: u64,
    config: &PipelineConfig<T>,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult<T>> {
    let fits = run_pipeline(ds, &[estimator], config);
    let point = fits.params(estimator)?;
    let mut out = bootstrap_many(ds, &[(estimator, point)], b, seed, config, opts)?;
    Ok(out.remove(0))
}

/// Bootstraps several estimators from the same resamples. Each entry pairs an
/// estimator with its full-data point estimate. Replicates that fail are
/// dropped; more than 10% dropped for any estimator is an error.
pub fn bootstrap_many<T: Real>(
    ds: &Dataset<T>,
    points: &[(Estimator, Vec<T>)],
    b: usize,
    seed: u64,
    config: &PipelineConfig<T>,
    opts: &BootstrapOptions,
) -> Result<Vec<BootstrapResult<T>>> {
    if b < 2 {
        return Err(Error::Invalid("bootstrap needs at least 2 replicates".into()));
    }
    let mut needed: Vec<Estimator> = points.iter().map(|(e, _)| replicate_estimator(*e)).collect();
    needed.dedup();
    let n = ds.n();
    let replicate = |r: usize| -> Vec<Option<Vec<T>>> {
        let resampled;
        let data = if opts.identity_resample {
            ds
        } else {
            match ds.resample(&resample_indices(seed, r, n)) {
                Ok(d) => {
                    resampled = d;
                    &resampled
                }
                Err(_) => return vec![None; points.len()],
            }
        };
        let fits = run_pipeline(data, &needed, config);
        points.iter().map(|(e, _)| fits.params(replicate_estimator(*e)).ok()).collect()
    };
    let rows: Vec<Vec<Option<Vec<T>>>> = with_workers(opts.workers, || (0..b).into_par_iter().map(replicate).collect())?;

    let mut results = Vec::with_capacity(points.len());
    for (k, (est, point)) in points.iter().enumerate() {
        let estimates: Vec<Vec<T>> = rows.iter().filter_map(|row| row[k].clone()).collect();
        let dropped = b - estimates.len();
        if dropped * 10 > b {
            return Err(Error::BootstrapFailures { dropped, total: b });
        }
        let q = point.len();
        let mut se = Vec::with_capacity(q);
        let mut ci = Vec::with_capacity(q);
        let mut pci = Vec::with_capacity(q);
        for j in 0..q {
            let col: Vec<T> = estimates.iter().map(|row| row[j]).collect();
            let s = mean_sd(&col).1.unwrap_or(T::zero());
            se.push(s);
            let half = T::lit(1.96) * s;
            ci.push((point[j] - half, point[j] + half));
            if opts.percentile {
                let mut sorted = col;
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                pci.push((quantile(&sorted, 0.025), quantile(&sorted, 0.975)));
            }
        }
        results.push(BootstrapResult {
            estimator: *est,
            parameter_names: est.parameter_names(ds.p()),
            point: point.clone(),
            estimates,
            se,
            ci,
            percentile_ci: opts.percentile.then_some(pci),
            b,
            dropped,
            seed,
        });
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub estimator: Estimator,
    pub parameter: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// Undefined with a single replicate.
    pub ese: Option<f64>,
    /// Present only when bootstrap was run.
    pub ase: Option<f64>,
    pub cp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloTable {
    pub spec: ScenarioSpec,
    pub replicates: usize,
    pub bootstrap_b: usize,
    pub rows: Vec<TableRow>,
    /// Replicates each estimator failed on, in estimator order.
    pub failures: Vec<(Estimator, usize)>,
    /// Per estimator, the table parameters of every successful replicate.
    pub replicate_estimates: Vec<(Estimator, Vec<Vec<f64>>)>,
}

impl MonteCarloTable {
    pub fn row(&self, est: Estimator, parameter: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.estimator == est && r.parameter == parameter)
    }

    /// CSV with columns scaled like the published tables; `NA` marks undefined cells.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "scenario", "n", "frailty", "estimator", "parameter", "truth", "bias_x1000", "ese_x1000", "ase_x1000",
            "cp_percent",
        ])?;
        let frailty = match self.spec.frailty {
            crate::simulate::Frailty::DegenerateOne => "degenerate_one",
            crate::simulate::Frailty::Gamma => "gamma",
        };
        let cell = |v: Option<f64>, scale: f64| v.map_or_else(|| "NA".to_string(), |v| format!("{:.1}", v * scale));
        for r in &self.rows {
            w.write_record([
                self.spec.scenario.to_string(),
                self.spec.n.to_string(),
                frailty.to_string(),
                r.estimator.to_string(),
                r.parameter.clone(),
                format!("{}", r.truth),
                cell(Some(r.bias), 1000.0),
                cell(r.ese, 1000.0),
                cell(r.ase, 1000.0),
                cell(r.cp, 100.0),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MonteCarloOptions {
    pub workers: Option<usize>,
}

fn truth_for(spec: &ScenarioSpec, est: Estimator) -> Vec<f64> {
    let t = spec.truth();
    match est {
        Estimator::ShapeSimplified | Estimator::ShapeFull => t.beta0,
        Estimator::SizeExp | Estimator::SizeMre => t.gamma0_normalized,
    }
}

struct ReplicateOutcome {
    /// Per estimator: table parameters and their bootstrap SEs.
    per_estimator: Vec<Option<(Vec<f64>, Option<Vec<f64>>)>>,
}

/// Replicate seed `r` of a study seeded with `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, r as u64)
}

/// Simulates `replicates` datasets from `spec` (its seed is replaced by derived
/// replicate seeds), fits each estimator, optionally bootstraps with `b`
/// replicates, and aggregates bias, ESE, ASE and coverage.
pub fn monte_carlo_study(
    spec: &ScenarioSpec,
    replicates: usize,
    b: usize,
    estimators: &[Estimator],
    seed: u64,
    config: &PipelineConfig<f64>,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloTable> {
    if replicates == 0 {
        return Err(Error::Invalid("at least one replicate is required".into()));
    }
    spec.validate()?;
    config.validate()?;
    let p = spec.p();
    let one = |r: usize| -> ReplicateOutcome {
        let mut rspec = spec.clone();
        rspec.seed = replicate_seed(seed, r);
        let Ok(ds) = simulate_dataset(&rspec) else {
            return ReplicateOutcome { per_estimator: vec![None; estimators.len()] };
        };
        let fits = run_pipeline(&ds, estimators, config);
        let points: Vec<Option<Vec<f64>>> = estimators.iter().map(|&e| fits.params(e).ok()).collect();
        let boot = if b >= 2 {
            let available: Vec<(Estimator, Vec<f64>)> = estimators
                .iter()
                .zip(&points)
                .filter_map(|(&e, pt)| pt.clone().map(|pt| (e, pt)))
                .collect();
            let boot_seed = derive_seed(rspec.seed, 0xB007);
            bootstrap_many(&ds, &available, b, boot_seed, config, &BootstrapOptions { workers: None, ..Default::default() })
                .ok()
        } else {
            None
        };
        let per_estimator = estimators
            .iter()
            .zip(&points)
            .map(|(&e, pt)| {
                let pt = pt.as_ref()?;
                let keep = e.table_parameters(p);
                let est: Vec<f64> = keep.iter().map(|&j| pt[j]).collect();
                let se = if b >= 2 {
                    let res = boot.as_ref()?.iter().find(|r| r.estimator == e)?;
                    Some(keep.iter().map(|&j| res.se[j]).collect())
                } else {
                    None
                };
                Some((est, se))
            })
            .collect();
        ReplicateOutcome { per_estimator }
    };
    let outcomes: Vec<ReplicateOutcome> =
        with_workers(opts.workers, || (0..replicates).into_par_iter().map(one).collect())?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut replicate_estimates = Vec::new();
    for (k, &est) in estimators.iter().enumerate() {
        let ok: Vec<&(Vec<f64>, Option<Vec<f64>>)> =
            outcomes.iter().filter_map(|o| o.per_estimator[k].as_ref()).collect();
        let failed = replicates - ok.len();
        if failed * 20 > replicates || ok.is_empty() {
            return Err(Error::MonteCarloFailures { failed, total: replicates });
        }
        failures.push((est, failed));
        let names = est.parameter_names(p);
        let truth = truth_for(spec, est);
        for (slot, &j) in est.table_parameters(p).iter().enumerate() {
            let col: Vec<f64> = ok.iter().map(|o| o.0[slot]).collect();
            let (mean, ese) = mean_sd(&col);
            let t = truth[slot];
            let (ase, cp) = if b >= 2 {
                let ses: Vec<f64> = ok.iter().map(|o| o.1.as_ref().map_or(f64::NAN, |s| s[slot])).collect();
                let covered = ok
                    .iter()
                    .zip(&ses)
                    .filter(|((est, _), &se)| (est[slot] - t).abs() <= 1.96 * se)
                    .count();
                (Some(mean_sd(&ses).0), Some(covered as f64 / ok.len() as f64))
            } else {
                (None, None)
            };
            rows.push(TableRow {
                estimator: est,
                parameter: names[j].clone(),
                truth: t,
                mean,
                bias: mean - t,
                ese,
                ase,
                cp,
            });
        }
        replicate_estimates.push((est, ok.iter().map(|o| o.0.clone()).collect()));
    }
    Ok(MonteCarloTable { spec: spec.clone(), replicates, bootstrap_b: b, rows, failures, replicate_estimates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_sd_is_order_free() {
        let a = [0.1, 0.7, 0.2, 1e-9, 3.3];
        let mut b = a;
        b.reverse();
        assert_eq!(mean_sd(&a), mean_sd(&b));
        assert_eq!(mean_sd(&[2.0]).1, None);
    }

    #[test]
    fn names() {
        assert_eq!(Estimator::SizeExp.parameter_names(2).len(), 5);
        assert_eq!(Estimator::SizeExp.table_parameters(2), vec![3, 4]);
        assert_eq!(Estimator::ShapeFull.table_parameters(2), vec![0, 1]);
    }

    #[test]
    fn percentile_quantiles() {
        let v: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.025), 2.5);
        assert_eq!(quantile(&v, 0.975), 97.5);
    }
}
