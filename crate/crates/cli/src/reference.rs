//! Published Monte Carlo results used by `reproduce`.
//!
//! `data/reference_tables.csv` holds the shape (table 1) and size (table 2)
//! summaries: bias and standard errors times 1000, coverage in percent. The
//! full-objective shape estimator has no ASE column in the source.

use shapesize::{Estimator, Frailty, Scenario};

const TABLES: &str = include_str!("../data/reference_tables.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub table: u8,
    pub estimator: Estimator,
    pub scenario: Scenario,
    pub n: usize,
    pub frailty: Frailty,
    pub parameter: String,
    pub bias_x1000: f64,
    pub ese_x1000: f64,
    pub ase_x1000: Option<f64>,
    pub cp_percent: f64,
}

fn estimator(s: &str) -> Estimator {
    Estimator::ALL.into_iter().find(|e| e.to_string() == s).unwrap_or_else(|| panic!("unknown estimator {s}"))
}

fn frailty(s: &str) -> Frailty {
    match s {
        "degenerate_one" => Frailty::DegenerateOne,
        "gamma" => Frailty::Gamma,
        _ => panic!("unknown frailty {s}"),
    }
}

pub fn all() -> Vec<Reference> {
    TABLES
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().unwrap_or_else(|_| panic!("bad number in `{line}`"));
            Reference {
                table: f[0].parse().expect("table"),
                estimator: estimator(f[1]),
                scenario: f[2].parse().expect("scenario"),
                n: f[3].parse().expect("n"),
                frailty: frailty(f[4]),
                parameter: f[5].to_string(),
                bias_x1000: num(6),
                ese_x1000: num(7),
                ase_x1000: (f[8] != "NA").then(|| num(8)),
                cp_percent: num(9),
            }
        })
        .collect()
}

pub fn lookup(estimator: Estimator, scenario: Scenario, n: usize, frailty: Frailty, parameter: &str) -> Option<Reference> {
    all().into_iter().find(|r| {
        r.estimator == estimator && r.scenario == scenario && r.n == n && r.frailty == frailty && r.parameter == parameter
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_complete() {
        let refs = all();
        assert_eq!(refs.len(), 96);
        for table in [1, 2] {
            assert_eq!(refs.iter().filter(|r| r.table == table).count(), 48);
        }
        assert!(refs.iter().all(|r| (r.ase_x1000.is_none()) == (r.estimator == Estimator::ShapeFull)));
    }

    #[test]
    fn spot_values() {
        let r = lookup(Estimator::ShapeSimplified, Scenario::M1, 200, Frailty::DegenerateOne, "beta1").unwrap();
        assert_eq!((r.bias_x1000, r.ese_x1000, r.ase_x1000, r.cp_percent), (-11.0, 84.0, Some(88.0), 96.3));
        let r = lookup(Estimator::SizeExp, Scenario::M3, 400, Frailty::DegenerateOne, "gamma1_normalized").unwrap();
        assert_eq!((r.bias_x1000, r.ese_x1000, r.ase_x1000, r.cp_percent), (-4.0, 60.0, Some(63.0), 95.9));
        let r = lookup(Estimator::SizeMre, Scenario::M2, 200, Frailty::Gamma, "gamma2").unwrap();
        assert_eq!((r.bias_x1000, r.ese_x1000, r.ase_x1000, r.cp_percent), (-20.0, 201.0, Some(205.0), 95.3));
    }
}
