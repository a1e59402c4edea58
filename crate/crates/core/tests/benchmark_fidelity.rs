//! Benchmark values against fixtures from an independent implementation
//! (regenerate with `fixtures/generate.py`).

mod common;

use common::*;

#[test]
fn fixtures_have_fifty_points() {
    for name in PROBLEMS {
        assert_eq!(fixture(name).len(), 50, "{name}");
    }
}

#[test]
fn every_problem_matches_the_reference_implementation() {
    for name in PROBLEMS {
        let err = benchmark_relative_error(name);
        assert!(err <= 1e-6, "{name}: relative error {err:e}");
    }
}

#[test]
fn closed_form_fronts_hold() {
    assert!(pareto_identity_error(200, 3) <= 1e-12);
}
