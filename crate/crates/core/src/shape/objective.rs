//! Batched evaluation of the shape objectives.
//!
//! Everything that does not depend on the direction `beta` is prepared once:
//! the pooled event atoms in `(tau0, tau1]` sorted by time and grouped by equal
//! times, the censoring order, and for each contributing event the range of
//! pooled events within one bandwidth in time (with the time-kernel values
//! cached when they fit in memory). An evaluation then computes, per subject
//! `i`, the index weights `K_h(x_i - x_j)`, a single ascending sweep over the
//! atom groups for the at-risk sums, and a suffix sum for the tail integrals.
//! Cost per evaluation is `O(n (n + E))` plus the time-kernel neighborhoods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TrimSpec};
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, KernelFamily, KernelSpec};
use crate::scalar::Real;

use super::estimators::{atom_increment, Increment, DEN_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// `l(beta)`: log-rate minus the tail-integral correction.
    Full,
    /// `l'(beta)`: log-rate terms only.
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue<T = f64> {
    pub value: T,
    pub skipped_atoms: usize,
    pub clamped_atoms: usize,
    pub floored_rates: usize,
}

const MAX_CACHE_ENTRIES: usize = 10_000_000;
const PARALLEL_MIN_SUBJECTS: usize = 512;

#[derive(Debug, Clone)]
struct OwnEvent {
    /// Atom group holding this event; `None` when the event sits at `tau0`.
    group: Option<usize>,
    nb_lo: usize,
    nb_hi: usize,
    cache_off: usize,
}

#[derive(Debug, Clone)]
struct SubjectTerms {
    subject: usize,
    events: Vec<OwnEvent>,
}

#[derive(Debug, Clone)]
pub struct ShapeObjective<'a, T: Real = f64> {
    ds: &'a Dataset<T>,
    kernel: KernelSpec<T>,
    trim: TrimSpec<T>,
    h: T,
    in_region: Vec<bool>,
    atom_subject: Vec<usize>,
    group_start: Vec<usize>,
    group_time: Vec<T>,
    /// `(C_j, j, atoms of j)` for region subjects with atoms, ascending in `C_j`.
    censor_order: Vec<(T, usize, usize)>,
    /// First atom group strictly after `C_i`, per subject.
    group_after_censor: Vec<usize>,
    kev_time: Vec<T>,
    kev_subject: Vec<usize>,
    terms: Vec<SubjectTerms>,
    own_events: usize,
    time_kernel: Option<Vec<T>>,
}

#[derive(Default)]
struct Partial<T> {
    value: T,
    skipped: usize,
    clamped: usize,
    floored: usize,
}

impl<'a, T: Real> ShapeObjective<'a, T> {
    pub fn new(ds: &'a Dataset<T>, kernel: &KernelSpec<T>, trim: &TrimSpec<T>) -> Result<Self> {
        Self::build(ds, kernel, trim, true)
    }

    /// Evaluator for the tail integrals only; skips the time-kernel cache.
    pub(crate) fn tails_only(ds: &'a Dataset<T>, kernel: &KernelSpec<T>, trim: &TrimSpec<T>) -> Result<Self> {
        Self::build(ds, kernel, trim, false)
    }

    fn build(ds: &'a Dataset<T>, kernel: &KernelSpec<T>, trim: &TrimSpec<T>, rate_cache: bool) -> Result<Self> {
        trim.validate(ds)?;
        let h = kernel.bandwidth(ds.n());
        let in_region = trim.z_region.mask(ds);
        let subjects = ds.subjects();

        let mut atoms: Vec<(T, usize)> = Vec::new();
        let mut kev: Vec<(T, usize)> = Vec::new();
        let mut atom_counts = vec![0usize; ds.n()];
        for (j, s) in subjects.iter().enumerate() {
            if !in_region[j] {
                continue;
            }
            for &t in &s.events {
                kev.push((t, j));
                if t > trim.tau0 && t <= trim.tau1 {
                    atoms.push((t, j));
                    atom_counts[j] += 1;
                }
            }
        }
        let by_time = |a: &(T, usize), b: &(T, usize)| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1));
        atoms.sort_by(by_time);
        kev.sort_by(by_time);

        let mut group_start = Vec::new();
        let mut group_time = Vec::new();
        for (k, &(t, _)) in atoms.iter().enumerate() {
            if group_time.last() != Some(&t) {
                group_start.push(k);
                group_time.push(t);
            }
        }
        group_start.push(atoms.len());

        let mut censor_order: Vec<(T, usize, usize)> = (0..ds.n())
            .filter(|&j| atom_counts[j] > 0)
            .map(|j| (subjects[j].c, j, atom_counts[j]))
            .collect();
        censor_order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let group_after_censor = subjects
            .iter()
            .map(|s| group_time.partition_point(|&u| u <= s.c))
            .collect();

        let kev_time: Vec<T> = kev.iter().map(|e| e.0).collect();
        let kev_subject: Vec<usize> = kev.iter().map(|e| e.1).collect();

        let mut terms = Vec::new();
        let mut own_events = 0;
        let mut cache_len = 0usize;
        for (i, s) in subjects.iter().enumerate() {
            if !in_region[i] {
                continue;
            }
            let events: Vec<OwnEvent> = s
                .events
                .iter()
                .filter(|&&t| t >= trim.tau0 && t <= trim.tau1)
                .map(|&t| {
                    let group = if t > trim.tau0 {
                        let g = group_time.partition_point(|&u| u < t);
                        debug_assert!(group_time[g] == t);
                        Some(g)
                    } else {
                        None
                    };
                    let nb_lo = kev_time.partition_point(|&u| u <= t - h);
                    let nb_hi = kev_time.partition_point(|&u| u < t + h);
                    let ev = OwnEvent { group, nb_lo, nb_hi, cache_off: cache_len };
                    cache_len += nb_hi - nb_lo;
                    ev
                })
                .collect();
            if !events.is_empty() {
                own_events += events.len();
                terms.push(SubjectTerms { subject: i, events });
            }
        }

        let time_kernel = (rate_cache && cache_len <= MAX_CACHE_ENTRIES).then(|| {
            let mut cache = Vec::with_capacity(cache_len);
            for term in &terms {
                let t_own = &subjects[term.subject].events;
                let own_times = t_own.iter().filter(|&&t| t >= trim.tau0 && t <= trim.tau1);
                for (ev, &t) in term.events.iter().zip(own_times) {
                    for &u in &kev_time[ev.nb_lo..ev.nb_hi] {
                        cache.push(kernel_eval(kernel.family, (t - u) / h) / h);
                    }
                }
            }
            cache
        });

        Ok(Self {
            ds,
            kernel: *kernel,
            trim: trim.clone(),
            h,
            in_region,
            atom_subject: atoms.iter().map(|a| a.1).collect(),
            group_start,
            group_time,
            censor_order,
            group_after_censor,
            kev_time,
            kev_subject,
            terms,
            own_events,
            time_kernel,
        })
    }

    /// Number of events entering the objective sums.
    pub fn in_window_events(&self) -> usize {
        self.own_events
    }

    pub fn bandwidth(&self) -> T {
        self.h
    }

    fn weights_into(&self, family: KernelFamily, x: &[T], i: usize, w: &mut [T]) {
        let xi = x[i];
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = if self.in_region[j] { kernel_eval(family, (xi - x[j]) / self.h) / self.h } else { T::zero() };
        }
    }

    /// At-risk sums at every atom group; fills `tail` with the suffix sums of
    /// the atom contributions when requested. Returns skipped and clamped atoms.
    fn sweep(&self, w: &[T], at_risk: &mut Vec<T>, tail: Option<&mut Vec<T>>) -> (usize, usize) {
        let groups = self.group_time.len();
        at_risk.clear();
        at_risk.reserve(groups);
        let mut mass = Vec::new();
        let want_tail = tail.is_some();
        if want_tail {
            mass.reserve(groups);
        }
        let mut running = T::zero();
        let mut removed = T::zero();
        let mut cidx = 0;
        for g in 0..groups {
            let u = self.group_time[g];
            let mut num = T::zero();
            for &j in &self.atom_subject[self.group_start[g]..self.group_start[g + 1]] {
                num = num + w[j];
            }
            running = running + num;
            while cidx < self.censor_order.len() && self.censor_order[cidx].0 < u {
                let (_, j, cnt) = self.censor_order[cidx];
                removed = removed + w[j] * T::from_count(cnt);
                cidx += 1;
            }
            at_risk.push(running - removed);
            if want_tail {
                mass.push(num);
            }
        }
        let (mut skipped, mut clamped) = (0, 0);
        if let Some(tail) = tail {
            tail.clear();
            tail.resize(groups + 1, T::zero());
            for g in (0..groups).rev() {
                let mut add = T::zero();
                if mass[g] != T::zero() {
                    let (inc, status) = atom_increment(mass[g], at_risk[g], self.kernel.clamp_jumps);
                    match status {
                        Increment::Skipped => skipped += 1,
                        Increment::Clamped => clamped += 1,
                        Increment::Kept => {}
                    }
                    add = inc;
                }
                tail[g] = tail[g + 1] + add;
            }
        }
        (skipped, clamped)
    }

    fn rate_numerator(&self, ev: &OwnEvent, t: T, w: &[T]) -> T {
        let subj = &self.kev_subject[ev.nb_lo..ev.nb_hi];
        match &self.time_kernel {
            Some(cache) => {
                let kv = &cache[ev.cache_off..ev.cache_off + (ev.nb_hi - ev.nb_lo)];
                subj.iter().zip(kv).fold(T::zero(), |acc, (&j, &k)| acc + w[j] * k)
            }
            None => {
                let times = &self.kev_time[ev.nb_lo..ev.nb_hi];
                subj.iter().zip(times).fold(T::zero(), |acc, (&j, &u)| {
                    acc + w[j] * kernel_eval(self.kernel.family, (t - u) / self.h) / self.h
                })
            }
        }
    }

    fn subject_terms(&self, term: &SubjectTerms, x: &[T], mode: Mode) -> Partial<T> {
        let n = self.ds.n();
        let mut w = vec![T::zero(); n];
        self.weights_into(self.kernel.family, x, term.subject, &mut w);
        let mut at_risk = Vec::new();
        let mut tail = Vec::new();
        let need_tail = !matches!(mode, Mode::Simplified);
        let (skipped, clamped) = self.sweep(&w, &mut at_risk, need_tail.then_some(&mut tail));
        let own_times = self.ds.subjects()[term.subject]
            .events
            .iter()
            .filter(|&&t| t >= self.trim.tau0 && t <= self.trim.tau1);
        let tail_c = if need_tail { tail[self.group_after_censor[term.subject]] } else { T::zero() };
        let floor = T::lit(DEN_FLOOR);

        let mut out = Partial { value: T::zero(), skipped, clamped, floored: 0 };
        for (ev, &t) in term.events.iter().zip(own_times) {
            let tail_t = match (need_tail, ev.group) {
                // The diagnostic takes the left limit at the event, so the event's own atom counts.
                (true, Some(g)) if matches!(mode, Mode::Tail) => tail[g],
                (true, Some(g)) => tail[g + 1],
                (true, None) => tail[0],
                _ => T::zero(),
            };
            match mode {
                Mode::Tail => out.value = out.value + tail_t - tail_c,
                Mode::Simplified | Mode::Full => {
                    let den = ev.group.map_or(T::zero(), |g| at_risk[g]);
                    let rate = if den <= floor {
                        out.floored += 1;
                        self.kernel.r0
                    } else {
                        let raw = self.rate_numerator(ev, t, &w) / den;
                        if raw < self.kernel.r0 {
                            out.floored += 1;
                            self.kernel.r0
                        } else {
                            raw
                        }
                    };
                    out.value = out.value + rate.ln();
                    if matches!(mode, Mode::Full) {
                        out.value = out.value - tail_t + tail_c;
                    }
                }
            }
        }
        out
    }

    fn accumulate(&self, beta: &[T], mode: Mode) -> ObjectiveValue<T> {
        let x = self.ds.indices(beta);
        let parts: Vec<Partial<T>> = if self.ds.n() >= PARALLEL_MIN_SUBJECTS {
            self.terms.par_iter().map(|term| self.subject_terms(term, &x, mode)).collect()
        } else {
            self.terms.iter().map(|term| self.subject_terms(term, &x, mode)).collect()
        };
        let n = T::from_count(self.ds.n());
        let mut total = ObjectiveValue { value: T::zero(), skipped_atoms: 0, clamped_atoms: 0, floored_rates: 0 };
        for p in parts {
            total.value = total.value + p.value;
            total.skipped_atoms += p.skipped;
            total.clamped_atoms += p.clamped;
            total.floored_rates += p.floored;
        }
        total.value = total.value / n;
        total
    }

    pub fn evaluate(&self, beta: &[T], kind: ObjectiveKind) -> Result<ObjectiveValue<T>> {
        if beta.len() != self.ds.p() {
            return Err(Error::Invalid(format!("direction has length {}, expected {}", beta.len(), self.ds.p())));
        }
        if self.own_events == 0 {
            return Err(Error::ObjectiveUndefined);
        }
        let mode = match kind {
            ObjectiveKind::Full => Mode::Full,
            ObjectiveKind::Simplified => Mode::Simplified,
        };
        Ok(self.accumulate(beta, mode))
    }

    /// `(1/n) sum_i sum_events [R(t-) - R(C_i)]` at the subjects' own indices,
    /// where `R(t-)` includes the atom at `t`.
    pub fn tail_statistic(&self, beta: &[T]) -> T {
        if self.own_events == 0 {
            return T::zero();
        }
        self.accumulate(beta, Mode::Tail).value
    }

    /// Tail integral `R(C_i, x_i)` for every subject at direction `beta`,
    /// with the number of skipped or clamped atoms for each.
    pub fn tail_at_censoring(&self, beta: &[T]) -> Vec<(T, usize)> {
        let x = self.ds.indices(beta);
        let one = |i: usize| {
            let mut w = vec![T::zero(); self.ds.n()];
            self.weights_into(self.kernel.family, &x, i, &mut w);
            let mut at_risk = Vec::new();
            let mut tail = Vec::new();
            let (skipped, clamped) = self.sweep(&w, &mut at_risk, Some(&mut tail));
            (tail[self.group_after_censor[i]], skipped + clamped)
        };
        if self.ds.n() >= PARALLEL_MIN_SUBJECTS {
            (0..self.ds.n()).into_par_iter().map(one).collect()
        } else {
            (0..self.ds.n()).map(one).collect()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Full,
    Simplified,
    Tail,
}

/// `l(beta)` on the trimmed estimators.
pub fn objective_full<T: Real>(ds: &Dataset<T>, beta: &[T], kernel: &KernelSpec<T>, trim: &TrimSpec<T>) -> Result<T> {
    Ok(ShapeObjective::new(ds, kernel, trim)?.evaluate(beta, ObjectiveKind::Full)?.value)
}

/// `l'(beta)`: the log-rate part of [`objective_full`].
pub fn objective_simplified<T: Real>(
    ds: &Dataset<T>,
    beta: &[T],
    kernel: &KernelSpec<T>,
    trim: &TrimSpec<T>,
) -> Result<T> {
    Ok(ShapeObjective::new(ds, kernel, trim)?.evaluate(beta, ObjectiveKind::Simplified)?.value)
}

/// `D(beta) = (1/n) sum_i sum_events [R(t-) - R(C_i)]` for each direction. Its
/// population value is the mean in-window event count whatever `beta` is; the
/// left limit at the event makes a lone subject's value exactly its count.
pub fn tail_count_statistic<T: Real>(
    ds: &Dataset<T>,
    betas: &[Vec<T>],
    kernel: &KernelSpec<T>,
    trim: &TrimSpec<T>,
) -> Result<Vec<T>> {
    let obj = ShapeObjective::new(ds, kernel, trim)?;
    Ok(betas.iter().map(|b| obj.tail_statistic(b)).collect())
}

/// Mean number of events per subject inside the trimming window and region.
pub fn mean_trimmed_count<T: Real>(ds: &Dataset<T>, trim: &TrimSpec<T>) -> T {
    let total: usize = ds
        .subjects()
        .iter()
        .filter(|s| trim.z_region.contains(&s.z))
        .map(|s| s.events.iter().filter(|&&t| t > trim.tau0 && t <= trim.tau1).count())
        .sum();
    T::from_count(total) / T::from_count(ds.n())
}
