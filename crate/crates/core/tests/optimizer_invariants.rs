use hetbo::benchmarks::{make_problem, BenchmarkSpec};
use hetbo::engine::{apd_winners, ReferenceVectorSet};
use hetbo::optimizer::{run, OptimizerConfig, RunOutcome, Variant};
use hetbo::problem::HeterogeneousProblem;
use proptest::prelude::*;

const N: usize = 43;

fn problem(ratios: Vec<u32>) -> HeterogeneousProblem {
    let spec = BenchmarkSpec::new("DTLZ2".parse().unwrap(), 3, 4);
    make_problem(&spec, ratios, 1).unwrap()
}

fn config(variant: Variant, fe_max: usize, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        variant,
        fe_max_expensive: fe_max,
        seed,
        ..OptimizerConfig::default()
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn strip_times(outcome: &RunOutcome) -> Vec<String> {
    outcome
        .trace
        .iter()
        .map(|r| {
            format!(
                "{} {} {:?} {:?} {} {} {} {:?} {:?}",
                r.itrn,
                r.fe_expensive,
                r.fe_cheap,
                r.igd_plus.map(f64::to_bits),
                r.penalty_min.to_bits(),
                r.penalty_max.to_bits(),
                r.nondominated,
                r.training_sizes,
                r.frozen_fingerprints
            )
        })
        .collect()
}

#[test]
fn ledger_follows_the_budget_schedule() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpBo, 52, 1), None).unwrap();
    assert_eq!(out.iterations(), 3);
    assert_eq!(out.ledger.fe_expensive, 52);
    assert_eq!(out.ledger.fe_cheap, vec![N * 5 + 3 * 3 * 5; 2]);
    assert_eq!(out.archive.len(), 52);
    assert!(out.trace.windows(2).all(|w| w[1].fe_expensive > w[0].fe_expensive));
}

#[test]
fn loop_guard_caps_the_last_batch() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpBo, 48, 2), None).unwrap();
    assert_eq!(out.iterations(), 2);
    assert_eq!(out.ledger.fe_expensive, 48);
    assert_eq!(out.ledger.fe_cheap, vec![N * 5 + 2 * 3 * 5; 2]);
}

#[test]
fn budget_equal_to_design_runs_no_iterations() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpBo, N, 3), None).unwrap();
    assert_eq!(out.iterations(), 0);
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.ledger.fe_expensive, N);
}

#[test]
fn frozen_models_never_change() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpBo, 52, 4), None).unwrap();
    let first = &out.trace[0].frozen_fingerprints;
    assert_eq!(first.iter().filter(|f| f.is_some()).count(), 2);
    assert!(out.trace.iter().all(|r| &r.frozen_fingerprints == first));
}

#[test]
fn adaptive_variant_applies_no_penalty() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::BoAaf, 52, 5), None).unwrap();
    assert!(out.trace.iter().all(|r| r.penalty_min == 1.0 && r.penalty_max == 1.0));
    let penalized = run(&p, &config(Variant::SbpBo, 52, 5), None).unwrap();
    assert!(penalized.trace[1..].iter().all(|r| r.penalty_min < 1.0));
}

#[test]
fn capped_variants_train_on_the_cap() {
    let p = problem(vec![5, 5, 1]);
    for variant in [Variant::SbpBoR, Variant::SbpBoC] {
        let cfg = OptimizerConfig {
            training_cap: Some(30),
            ..config(variant, 52, 6)
        };
        let out = run(&p, &cfg, None).unwrap();
        for r in &out.trace {
            assert_eq!(r.training_sizes, vec![30; 3], "{variant}");
            assert!(r.frozen_fingerprints.iter().all(Option::is_none));
        }
    }
}

#[test]
fn real_cheap_evaluation_variant_respects_expensive_budget() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpNoGpc, 49, 7), None).unwrap();
    assert_eq!(out.ledger.fe_expensive, 49);
    assert!(out.ledger.fe_cheap.iter().all(|&c| c >= 49));
}

#[test]
fn identical_seeds_give_identical_traces() {
    let p = problem(vec![5, 5, 1]);
    let a = run(&p, &config(Variant::SbpBo, 49, 8), None).unwrap();
    let b = run(&p, &config(Variant::SbpBo, 49, 8), None).unwrap();
    assert_eq!(strip_times(&a), strip_times(&b));
    assert_eq!(a.archive.full, b.archive.full);
    let c = run(&p, &config(Variant::SbpBo, 49, 9), None).unwrap();
    assert_ne!(a.archive.full, c.archive.full);
}

#[test]
fn nondominated_points_leave_only_by_domination() {
    let p = problem(vec![5, 5, 1]);
    let out = run(&p, &config(Variant::SbpBo, 55, 10), None).unwrap();
    let archive = &out.archive;
    let front_at = |t: usize| -> Vec<usize> {
        let members: Vec<usize> = (0..archive.len()).filter(|&i| archive.full_iteration[i] <= t).collect();
        members
            .iter()
            .copied()
            .filter(|&i| !members.iter().any(|&j| dominates(&archive.full[j].1, &archive.full[i].1)))
            .collect()
    };
    for t in 0..out.iterations() {
        let before = front_at(t);
        let after = front_at(t + 1);
        for i in before.iter().filter(|i| !after.contains(i)) {
            let newcomers = (0..archive.len()).filter(|&j| archive.full_iteration[j] == t + 1);
            assert!(newcomers.into_iter().any(|j| dominates(&archive.full[j].1, &archive.full[*i].1)));
        }
    }
    let mut final_front = front_at(out.iterations());
    let mut tracked = archive.nondominated().to_vec();
    final_front.sort();
    tracked.sort();
    assert_eq!(final_front, tracked);
}

proptest! {
    // With equal ratios every component gets the same penalty factor, and a
    // common positive factor leaves the APD selection unchanged.
    #[test]
    fn common_penalty_factor_keeps_the_selection(
        scores in proptest::collection::vec(proptest::collection::vec(0.01f64..2.0, 3), 5..40),
        factor in 0.05f64..1.0,
        progress in 0.0f64..1.0,
    ) {
        let refs = ReferenceVectorSet::for_objectives(3);
        let scaled: Vec<Vec<f64>> = scores.iter().map(|s| s.iter().map(|v| v * factor).collect()).collect();
        prop_assert_eq!(apd_winners(&scores, &refs, progress).unwrap(), apd_winners(&scaled, &refs, progress).unwrap());
    }
}
