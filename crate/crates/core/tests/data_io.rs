//! CSV ingestion against the fixture files, and save/load round trips.

use std::path::PathBuf;

use proptest::prelude::*;
use shapesize::{load_dataset, save_dataset, simulate_dataset, Dataset, Frailty, Scenario, ScenarioSpec, Subject};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/three_subjects").join(name)
}

#[test]
fn fixture_counts_match_event_rows() {
    let ds: Dataset<f64> = load_dataset(fixture("subjects.csv"), fixture("events.csv"), 1.0).unwrap();
    // Oracle: count event rows per id directly from the file text.
    let text = std::fs::read_to_string(fixture("events.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.is_empty()).collect();
    for s in ds.subjects() {
        let want = rows.iter().filter(|l| l.split(',').next() == Some(s.id.as_str())).count();
        assert_eq!(s.count(), want, "{}", s.id);
        assert!(s.events.windows(2).all(|w| w[0] <= w[1]));
    }
    let counts: Vec<usize> = ds.subjects().iter().map(|s| s.count()).collect();
    assert_eq!(counts, vec![2, 3, 0]);
}

#[test]
fn simulated_dataset_round_trips() {
    let ds = simulate_dataset(&ScenarioSpec::new(Scenario::M2, 50, Frailty::Gamma, 8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (s, e) = (dir.path().join("subjects.csv"), dir.path().join("events.csv"));
    save_dataset(&ds, &s, &e).unwrap();
    assert_eq!(load_dataset(&s, &e, ds.tau()).unwrap(), ds);
}

fn subject_strategy() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>)> {
    (proptest::collection::vec(-1e3f64..1e3, 2), 0.0f64..=1.0).prop_flat_map(|(z, c)| {
        (Just(z), Just(c), proptest::collection::vec(0.0..=c, 0..5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn save_then_load_is_identity(subjects in proptest::collection::vec(subject_strategy(), 1..8)) {
        let ds = Dataset::new(
            subjects.into_iter().enumerate().map(|(i, (z, c, ev))| Subject::new(format!("id{i}"), z, c, ev)).collect(),
            1.0,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (s, e) = (dir.path().join("s.csv"), dir.path().join("e.csv"));
        save_dataset(&ds, &s, &e).unwrap();
        let back: Dataset<f64> = load_dataset(&s, &e, 1.0).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn count_process_is_consistent(times in proptest::collection::vec(0.0f64..1.0, 0..10), probe in 0.0f64..1.0) {
        let s = Subject::new("a", vec![0.0], 1.0, times.clone());
        prop_assert_eq!(s.count_at(1.0), times.len());
        prop_assert_eq!(s.count_at(probe), times.iter().filter(|&&t| t <= probe).count());
        if let Some(first) = s.events.first() {
            if *first > 0.0 {
                prop_assert_eq!(s.count_at(first * 0.5), 0);
            }
        }
    }
}
