//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use shapesize::{Dataset, Subject};

/// Poisson log-link regression of counts on `(1, z1, z2)` by IRLS.
pub fn irls(z: &[[f64; 2]], y: &[f64]) -> [f64; 3] {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut th = [mean.ln(), 0.0, 0.0];
    for _ in 0..100 {
        let mut a = [[0.0; 3]; 3];
        let mut b = [0.0; 3];
        for (zi, &yi) in z.iter().zip(y) {
            let x = [1.0, zi[0], zi[1]];
            let eta = th[0] + th[1] * x[1] + th[2] * x[2];
            let mu = eta.exp();
            let work = eta + (yi - mu) / mu;
            for r in 0..3 {
                b[r] += mu * x[r] * work;
                for c in 0..3 {
                    a[r][c] += mu * x[r] * x[c];
                }
            }
        }
        // Gaussian elimination; the weighted Gram matrix is positive definite.
        for k in 0..3 {
            for r in k + 1..3 {
                let f = a[r][k] / a[k][k];
                for c in k..3 {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
        let mut next = [0.0; 3];
        for k in (0..3).rev() {
            next[k] = (b[k] - (k + 1..3).map(|c| a[k][c] * next[c]).sum::<f64>()) / a[k][k];
        }
        let change = (0..3).map(|k| (next[k] - th[k]).abs()).fold(0.0, f64::max);
        th = next;
        if change < 1e-14 {
            break;
        }
    }
    th
}

/// Fourth-order kernel written out from its polynomial form.
pub fn quartic(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        315.0 / 512.0 * (3.0 - 11.0 * u * u) * (1.0 - u * u).powi(3)
    }
}

/// Seven events on five subjects, with censoring before the horizon.
pub fn seven_event_fixture() -> Dataset<f64> {
    Dataset::new(
        vec![
            Subject::new("a", vec![0.2, -0.4], 0.9, vec![0.15, 0.6]),
            Subject::new("b", vec![-0.1, 0.3], 1.0, vec![0.35]),
            Subject::new("c", vec![0.5, 0.1], 0.7, vec![0.2, 0.45, 0.65]),
            Subject::new("d", vec![0.0, 0.0], 0.5, vec![]),
            Subject::new("e", vec![-0.3, -0.2], 1.0, vec![0.8]),
        ],
        1.0,
    )
    .unwrap()
}

/// Both shape objectives, untrimmed, by direct evaluation of the defining sums
/// with jumps clamped to `[0, 1]` and rates floored at 1e-6. Returns `(full, simplified)`.
pub fn naive_objectives(ds: &Dataset<f64>, beta: [f64; 2], h: f64) -> (f64, f64) {
    let subj = ds.subjects();
    let x = |z: &[f64]| beta[0] * z[0] + beta[1] * z[1];
    let w = |x0: f64, j: usize| quartic((x0 - x(&subj[j].z)) / h) / h;
    let count = |j: usize, t: f64| subj[j].events.iter().filter(|&&e| e <= t).count() as f64;
    let den = |x0: f64, u: f64| (0..subj.len()).filter(|&j| subj[j].c >= u).map(|j| w(x0, j) * count(j, u)).sum::<f64>();
    let mut atoms: Vec<f64> = subj.iter().flat_map(|s| s.events.iter().copied()).collect();
    atoms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    atoms.dedup();
    let big_r = |x0: f64, t: f64| {
        let mut total = 0.0;
        for &u in atoms.iter().filter(|&&u| u > t) {
            let num: f64 =
                (0..subj.len()).map(|j| w(x0, j) * subj[j].events.iter().filter(|&&e| e == u).count() as f64).sum();
            let d = den(x0, u);
            if num != 0.0 && d >= 1e-12 {
                total += (num / d).clamp(0.0, 1.0);
            }
        }
        total
    };
    let small_r = |x0: f64, t: f64| {
        let mut num = 0.0;
        for j in 0..subj.len() {
            for &e in &subj[j].events {
                num += w(x0, j) * quartic((t - e) / h) / h;
            }
        }
        let d = den(x0, t);
        if d <= 1e-12 {
            1e-6
        } else {
            (num / d).max(1e-6)
        }
    };
    let (mut full, mut simple) = (0.0, 0.0);
    for s in subj {
        let x0 = x(&s.z);
        for &t in &s.events {
            let lr = small_r(x0, t).ln();
            simple += lr;
            full += lr - big_r(x0, t) + big_r(x0, s.c);
        }
    }
    let n = subj.len() as f64;
    (full / n, simple / n)
}
