//! Bisection and interval coverage on synthetic objectives with known
//! answers.

use slice_sim_core::search::{bisect, optimize_grid};
use slice_sim_core::{Constraint, OutageEstimate, Probe, SearchSettings, TrialSeed};

fn binomial(p: f64, n: u64, seed: TrialSeed) -> u64 {
    let mut rng = seed.rng();
    (0..n).filter(|_| rng.uniform() < p).count() as u64
}

fn single(estimate: OutageEstimate, target: f64) -> Probe {
    Probe::new(vec![Constraint::new(estimate, target)])
}

#[test]
fn randomized_step_thresholds() {
    let settings = SearchSettings::new(1000, 1000, 1e-4).unwrap();
    let mut rng = TrialSeed::new(2024, 0).rng();
    for case in 0..50 {
        let threshold = 15.0 * rng.uniform();
        let r = bisect(0.0, 15.0, None, &settings, |x, n| {
            let failures = if x > threshold { n } else { 0 };
            single(OutageEstimate::from_counts(failures, n), 0.01)
        });
        assert!(r.meets);
        assert!((r.argmax - threshold).abs() <= 1e-4, "case {case}: {} vs {threshold}", r.argmax);
    }
}

#[test]
fn randomized_thresholds_above_a_floor() {
    let settings = SearchSettings::new(1000, 1000, 1e-4).unwrap();
    let mut rng = TrialSeed::new(2025, 0).rng();
    for case in 0..50 {
        let threshold = 200.0 * rng.uniform();
        let floor = threshold * rng.uniform();
        let r = bisect(0.0, 200.0, Some(floor), &settings, |x, n| {
            let failures = if x > threshold { n } else { 0 };
            single(OutageEstimate::from_counts(failures, n), 0.01)
        });
        assert!(r.meets && !r.pruned);
        assert!((r.argmax - threshold).abs() <= 1e-4, "case {case}: {} vs {threshold}", r.argmax);
    }
}

#[test]
fn linear_outage_crosses_at_ten() {
    // Pr(outage at x) = x / 100 against a 0.1 target.
    let settings = SearchSettings::new(10_000, 160_000, 1e-3).unwrap();
    let mut calls = 0u64;
    let r = bisect(0.0, 15.0, None, &settings, |x, n| {
        calls += 1;
        let f = binomial(x / 100.0, n, TrialSeed::new(77, calls));
        single(OutageEstimate::from_counts(f, n), 0.1)
    });
    assert!((r.argmax - 10.0).abs() < 0.5, "{}", r.argmax);
    assert!(r.band_low <= r.argmax && r.argmax <= r.band_high);
    assert!(r.band_high - r.band_low < 2.0);
}

#[test]
fn unit_target_accepts_whole_bracket() {
    let settings = SearchSettings::new(100, 100, 1e-3).unwrap();
    let r = bisect(0.0, 200.0, None, &settings, |x, n| {
        let f = binomial((x / 200.0).min(1.0), n, TrialSeed::new(1, x.to_bits()));
        single(OutageEstimate::from_counts(f, n), 1.0)
    });
    assert_eq!(r.argmax, 200.0);
}

#[test]
fn every_constraint_must_hold() {
    let settings = SearchSettings::new(1000, 1000, 1e-4).unwrap();
    let r = bisect(0.0, 15.0, None, &settings, |x, n| {
        let a = OutageEstimate::from_counts(if x > 7.0 { n } else { 0 }, n);
        let b = OutageEstimate::from_counts(if x > 3.0 { n } else { 0 }, n);
        Probe::new(vec![Constraint::new(a, 0.01), Constraint::new(b, 0.01)])
    });
    assert!((r.argmax - 3.0).abs() <= 1e-4);
}

#[test]
fn grid_search_finds_best_threshold() {
    let settings = SearchSettings::new(1000, 1000, 1e-3).unwrap();
    let grid: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    // Threshold peaks at 0.45.
    let best = optimize_grid(&grid, |&beta, floor| {
        let t = 10.0 - 20.0 * (beta - 0.45f64).abs();
        bisect(0.0, 15.0, floor, &settings, |x, n| {
            single(OutageEstimate::from_counts(if x > t { n } else { 0 }, n), 0.01)
        })
    })
    .unwrap();
    assert_eq!(best.index, 9);
    assert!((best.result.argmax - 10.0).abs() <= 1e-3);

    let none = optimize_grid(&grid, |_, floor| {
        bisect(0.0, 15.0, floor, &settings, |_, n| single(OutageEstimate::from_counts(n, n), 0.01))
    })
    .unwrap();
    assert!(!none.result.meets);
    assert_eq!(none.index, 0);
}

#[test]
fn wilson_coverage() {
    let n = 10_000;
    for (j, p) in [1e-3, 1e-2, 0.1].into_iter().enumerate() {
        let covered = (0..1000u64)
            .filter(|&i| {
                let f = binomial(p, n, TrialSeed::new(500 + j as u64, i));
                let e = OutageEstimate::from_counts(f, n);
                e.ci_low <= p && p <= e.ci_high
            })
            .count();
        assert!(covered >= 930, "p={p} covered={covered}");
    }
}
