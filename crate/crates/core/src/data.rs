//! Recurrent-event data: subjects, datasets, trimming regions, CSV I/O and
//! validation diagnostics.
//!
//! A subject carries its covariate vector `z`, its censoring time
//! `c = min(C*, tau)` and the ascending list of observed event times in
//! `[0, c]`. The observed counting process is `N(t) = #{events <= t}`.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{psd_rank, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject<T = f64> {
    pub id: String,
    pub z: Vec<T>,
    pub c: T,
    pub events: Vec<T>,
}

impl<T: Real> Subject<T> {
    /// Builds a subject, sorting the event times. Invariants are checked when
    /// the subject is placed into a [`Dataset`].
    pub fn new(id: impl Into<String>, z: Vec<T>, c: T, mut events: Vec<T>) -> Self {
        events.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        Self { id: id.into(), z, c, events }
    }

    /// `N(c)`, the number of observed events.
    pub fn count(&self) -> usize {
        self.events.len()
    }

    /// `N(t)`: number of events at or before `t`.
    pub fn count_at(&self, t: T) -> usize {
        self.events.partition_point(|&e| e <= t)
    }

    fn cast<U: Real>(&self) -> Subject<U> {
        let cv = |v: T| U::lit(v.as_f64());
        Subject {
            id: self.id.clone(),
            z: self.z.iter().map(|&v| cv(v)).collect(),
            c: cv(self.c),
            events: self.events.iter().map(|&v| cv(v)).collect(),
        }
    }
}

/// Immutable collection of subjects sharing a covariate dimension and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T = f64> {
    subjects: Vec<Subject<T>>,
    tau: T,
    p: usize,
}

impl<T: Real> Dataset<T> {
    pub fn new(mut subjects: Vec<Subject<T>>, tau: T) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::Invalid(format!("horizon tau must be positive and finite, got {tau}")));
        }
        let first = subjects
            .first()
            .ok_or_else(|| Error::Invalid("dataset must contain at least one subject".into()))?;
        let p = first.z.len();
        if p == 0 {
            return Err(Error::Invalid("covariate dimension must be at least 1".into()));
        }
        for s in subjects.iter_mut() {
            if s.z.len() != p {
                return Err(Error::Dimension { id: s.id.clone(), expected: p, found: s.z.len() });
            }
            if s.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("subject `{}`: non-finite covariate", s.id)));
            }
            if !s.c.is_finite() || s.c < T::zero() {
                return Err(Error::Invalid(format!("subject `{}`: censoring time must be in [0, tau]", s.id)));
            }
            if s.c > tau {
                return Err(Error::CensoringBeyondHorizon { id: s.id.clone(), c: s.c.as_f64(), tau: tau.as_f64() });
            }
            if s.events.windows(2).any(|w| !(w[0] <= w[1])) {
                s.events.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            }
            for &t in &s.events {
                if !t.is_finite() || t < T::zero() {
                    return Err(Error::Invalid(format!("subject `{}`: event time {t} outside [0, c]", s.id)));
                }
                if t > s.c {
                    return Err(Error::EventAfterCensoring { id: s.id.clone(), t: t.as_f64(), c: s.c.as_f64() });
                }
            }
        }
        Ok(Self { subjects, tau, p })
    }

    pub fn subjects(&self) -> &[Subject<T>] {
        &self.subjects
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn total_events(&self) -> usize {
        self.subjects.iter().map(Subject::count).sum()
    }

    pub fn mean_events(&self) -> T {
        T::from_count(self.total_events()) / T::from_count(self.n())
    }

    /// Shape indices `beta' Z_i` for every subject.
    pub fn indices(&self, beta: &[T]) -> Vec<T> {
        self.subjects.iter().map(|s| crate::scalar::dot(beta, &s.z)).collect()
    }

    /// New dataset made of the subjects at `indices` (repeats allowed), as
    /// produced by a with-replacement resample.
    pub fn resample(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Invalid("resample must be non-empty".into()));
        }
        let subjects = indices.iter().map(|&i| self.subjects[i].clone()).collect();
        Ok(Self { subjects, tau: self.tau, p: self.p })
    }

    /// Converts to another floating-point width.
    pub fn cast<U: Real>(&self) -> Dataset<U> {
        Dataset {
            subjects: self.subjects.iter().map(Subject::cast).collect(),
            tau: U::lit(self.tau.as_f64()),
            p: self.p,
        }
    }

    /// Rank of the centered covariate cross-product matrix.
    pub fn covariate_rank(&self) -> usize {
        let n = T::from_count(self.n());
        let mean: Vec<T> = (0..self.p)
            .map(|k| self.subjects.iter().map(|s| s.z[k]).sum::<T>() / n)
            .collect();
        let mut cov = vec![vec![T::zero(); self.p]; self.p];
        for s in &self.subjects {
            for a in 0..self.p {
                let da = s.z[a] - mean[a];
                for b in 0..self.p {
                    cov[a][b] = cov[a][b] + da * (s.z[b] - mean[b]);
                }
            }
        }
        let tol = T::epsilon().sqrt() * T::lit(1e-2);
        psd_rank(cov, tol)
    }

    pub fn is_identifiable(&self) -> bool {
        self.covariate_rank() == self.p
    }
}

/// Covariate region `S_Z` used for trimming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZRegion<T = f64> {
    #[default]
    All,
    /// Axis-aligned box `lower <= z <= upper`.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// `|beta_par' z| <= a` and `|beta_perp' z| <= a`, where `beta_par` and
    /// `beta_perp` are the projection of `beta` on `gamma` and its rejection.
    IndexSlab { beta: Vec<T>, gamma: Vec<T>, a: T },
}

impl<T: Real> ZRegion<T> {
    pub fn contains(&self, z: &[T]) -> bool {
        match self {
            ZRegion::All => true,
            ZRegion::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi),
            ZRegion::IndexSlab { beta, gamma, a } => crate::size::in_index_slab(z, beta, gamma, *a),
        }
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        let bad = match self {
            ZRegion::All => false,
            ZRegion::Box { lower, upper } => {
                lower.len() != p || upper.len() != p || lower.iter().zip(upper).any(|(l, u)| l > u)
            }
            ZRegion::IndexSlab { beta, gamma, a } => beta.len() != p || gamma.len() != p || !(*a > T::zero()),
        };
        if bad {
            Err(Error::Invalid(format!("covariate region incompatible with dimension {p}")))
        } else {
            Ok(())
        }
    }

    /// Membership mask over the subjects of `ds`.
    pub fn mask(&self, ds: &Dataset<T>) -> Vec<bool> {
        ds.subjects().iter().map(|s| self.contains(&s.z)).collect()
    }
}

/// Event-time window `[tau0, tau1]` and covariate region for the trimmed
/// estimators. The default (`untrimmed`) is `tau0 = 0`, `tau1 = tau`, all `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimSpec<T = f64> {
    pub tau0: T,
    pub tau1: T,
    #[serde(default)]
    pub z_region: ZRegion<T>,
}

impl<T: Real> TrimSpec<T> {
    pub fn untrimmed(tau: T) -> Self {
        Self { tau0: T::zero(), tau1: tau, z_region: ZRegion::All }
    }

    pub fn validate(&self, ds: &Dataset<T>) -> Result<()> {
        if !(T::zero() <= self.tau0 && self.tau0 < self.tau1 && self.tau1 <= ds.tau()) {
            return Err(Error::Invalid(format!(
                "trim window must satisfy 0 <= tau0 < tau1 <= tau (got {}, {}, tau = {})",
                self.tau0,
                self.tau1,
                ds.tau()
            )));
        }
        self.z_region.check_dim(ds.p())
    }

    pub fn is_untrimmed(&self, tau: T) -> bool {
        self.tau0 == T::zero() && self.tau1 == tau && self.z_region == ZRegion::All
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Pooled event times that repeat an earlier time (events minus distinct times).
    TiedEventTimes { count: usize },
    ZeroEventSubjects { count: usize },
    ConstantCovariate { index: usize },
    RankDeficient,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::TiedEventTimes { count } => write!(f, "{count} tied pooled event time(s)"),
            Diagnostic::ZeroEventSubjects { count } => write!(f, "{count} subject(s) with zero events"),
            Diagnostic::ConstantCovariate { index } => write!(f, "covariate z{} is constant across subjects", index + 1),
            Diagnostic::RankDeficient => write!(f, "covariate matrix rank-deficient; shape index unidentifiable"),
        }
    }
}

/// Pure report on ties, empty processes and covariate degeneracy.
pub fn validate<T: Real>(ds: &Dataset<T>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut pooled: Vec<T> = ds.subjects().iter().flat_map(|s| s.events.iter().copied()).collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let ties = pooled.windows(2).filter(|w| w[0] == w[1]).count();
    if ties > 0 {
        out.push(Diagnostic::TiedEventTimes { count: ties });
    }
    let empty = ds.subjects().iter().filter(|s| s.events.is_empty()).count();
    if empty > 0 {
        out.push(Diagnostic::ZeroEventSubjects { count: empty });
    }
    for k in 0..ds.p() {
        let first = ds.subjects()[0].z[k];
        if ds.subjects().iter().all(|s| s.z[k] == first) {
            out.push(Diagnostic::ConstantCovariate { index: k });
        }
    }
    if !ds.is_identifiable() {
        out.push(Diagnostic::RankDeficient);
    }
    out
}

fn parse_field<T: Real>(raw: &str, file: &str, line: u64, what: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::Parse {
        file: file.to_string(),
        line,
        msg: format!("non-numeric {what} `{raw}`"),
    })
}

/// Parses the two-table CSV format from readers. See [`load_dataset`].
pub fn read_dataset<T: Real, R1: Read, R2: Read>(subjects: R1, events: R2, tau: T) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(subjects);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "id" || cols[1] != "c" {
        return Err(Error::Parse {
            file: "subjects".into(),
            line: 1,
            msg: "header must be `id,c,z1,...,zp`".into(),
        });
    }
    let p = cols.len() - 2;
    let mut subjects: Vec<Subject<T>> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse { file: "subjects".into(), line, msg: "missing subject id".into() });
        }
        if rec.len() != p + 2 {
            return Err(Error::Dimension { id, expected: p, found: rec.len().saturating_sub(2) });
        }
        let c = parse_field(&rec[1], "subjects", line, "censoring time")?;
        let z = (0..p)
            .map(|k| parse_field(&rec[k + 2], "subjects", line, "covariate"))
            .collect::<Result<Vec<T>>>()?;
        if index.insert(id.clone(), subjects.len()).is_some() {
            return Err(Error::DuplicateId(id));
        }
        subjects.push(Subject { id, z, c, events: Vec::new() });
    }

    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(events);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols != ["id", "t"] {
        return Err(Error::Parse { file: "events".into(), line: 1, msg: "header must be `id,t`".into() });
    }
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Parse { file: "events".into(), line, msg: "expected 2 fields".into() });
        }
        let id = rec[0].trim();
        let t: T = parse_field(&rec[1], "events", line, "event time")?;
        let &k = index.get(id).ok_or_else(|| Error::UnknownSubject(id.to_string()))?;
        subjects[k].events.push(t);
    }
    for s in subjects.iter_mut() {
        s.events.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    }
    Dataset::new(subjects, tau)
}

/// Loads `subjects.csv` (`id,c,z1,...,zp`) and `events.csv` (`id,t`).
pub fn load_dataset<T: Real>(subjects_csv: impl AsRef<Path>, events_csv: impl AsRef<Path>, tau: T) -> Result<Dataset<T>> {
    let s = std::fs::File::open(subjects_csv)?;
    let e = std::fs::File::open(events_csv)?;
    read_dataset(std::io::BufReader::new(s), std::io::BufReader::new(e), tau)
}

/// Writes the two-table CSV format. Values use shortest round-trip decimal text.
pub fn write_dataset<T: Real, W1: Write, W2: Write>(ds: &Dataset<T>, subjects: W1, events: W2) -> Result<()> {
    let mut w = csv::Writer::from_writer(subjects);
    let mut header = vec!["id".to_string(), "c".to_string()];
    header.extend((1..=ds.p()).map(|k| format!("z{k}")));
    w.write_record(&header)?;
    for s in ds.subjects() {
        let mut row = vec![s.id.clone(), s.c.to_string()];
        row.extend(s.z.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(events);
    w.write_record(["id", "t"])?;
    for s in ds.subjects() {
        for t in &s.events {
            w.write_record([s.id.as_str(), &t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset<T: Real>(ds: &Dataset<T>, subjects_csv: impl AsRef<Path>, events_csv: impl AsRef<Path>) -> Result<()> {
    let s = std::fs::File::create(subjects_csv)?;
    let e = std::fs::File::create(events_csv)?;
    write_dataset(ds, std::io::BufWriter::new(s), std::io::BufWriter::new(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(subjects: &str, events: &str, tau: f64) -> Result<Dataset<f64>> {
        read_dataset(subjects.as_bytes(), events.as_bytes(), tau)
    }

    #[test]
    fn empty_process_dataset() {
        let d = ds("id,c,z1\na,1.0,0.5\nb,0.7,-0.2\n", "id,t\n", 1.0).unwrap();
        assert_eq!(d.n(), 2);
        assert!(d.subjects().iter().all(|s| s.events.is_empty()));
    }

    #[test]
    fn event_after_censoring_rejected() {
        let err = ds("id,c,z1\na,0.4,0.5\n", "id,t\na,0.5\n", 1.0).unwrap_err();
        assert!(matches!(err, Error::EventAfterCensoring { .. }));
        assert!(err.to_string().contains("event after censoring"));
    }

    #[test]
    fn load_errors() {
        assert!(matches!(ds("id,c,z1\na,1,0\na,1,1\n", "id,t\n", 1.0), Err(Error::DuplicateId(_))));
        assert!(matches!(ds("id,c,z1\na,1,0\n", "id,t\nb,0.5\n", 1.0), Err(Error::UnknownSubject(_))));
        assert!(matches!(ds("id,c,z1\na,2,0\n", "id,t\n", 1.0), Err(Error::CensoringBeyondHorizon { .. })));
        assert!(matches!(ds("id,c,z1\na,1,x\n", "id,t\n", 1.0), Err(Error::Parse { .. })));
        assert!(matches!(ds("id,c,z1,z2\na,1,0,1\nb,1,0\n", "id,t\n", 1.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn counting_process() {
        let s = Subject::new("a", vec![0.0], 1.0, vec![0.7, 0.2, 0.2]);
        assert_eq!(s.events, vec![0.2, 0.2, 0.7]);
        assert_eq!(s.count_at(0.1), 0);
        assert_eq!(s.count_at(0.2), 2);
        assert_eq!(s.count_at(s.c), s.count());
    }

    #[test]
    fn diagnostics() {
        let d = ds("id,c,z1,z2\na,1,0.5,1\nb,1,0.5,1\n", "id,t\na,0.3\nb,0.4\n", 1.0).unwrap();
        let diags = validate(&d);
        assert!(diags.contains(&Diagnostic::RankDeficient));
        assert!(diags
            .iter()
            .any(|d| d.to_string() == "covariate matrix rank-deficient; shape index unidentifiable"));

        let d = ds("id,c,z1,z2\na,1,0.5,1\nb,1,-0.1,2\nc,1,0.9,0.3\n", "id,t\na,0.3\nb,0.4\nc,0.8\n", 1.0).unwrap();
        assert!(validate(&d).is_empty());

        let d = ds("id,c,z1,z2\na,1,0.5,1\nb,1,-0.1,2\nc,1,0.9,0.3\n", "id,t\na,0.3\nb,0.3\nc,0.8\n", 1.0).unwrap();
        assert_eq!(validate(&d), vec![Diagnostic::TiedEventTimes { count: 1 }]);
    }

    #[test]
    fn box_region() {
        let r = ZRegion::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] };
        assert!(r.contains(&[0.0, 1.0]));
        assert!(!r.contains(&[0.0, 1.5]));
        assert!(ZRegion::<f64>::All.contains(&[9.0, 9.0]));
    }
}
