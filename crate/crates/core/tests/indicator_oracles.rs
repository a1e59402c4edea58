mod common;

use common::*;
use hetbo::metrics::{igd, igd_plus};

#[test]
fn matches_double_loop_oracle() {
    for (a, z) in random_indicator_instances(100, 42) {
        let plus = igd_plus(&a, &z).unwrap();
        let plain = igd(&a, &z).unwrap();
        assert!((plus - naive_igd_plus(&a, &z)).abs() <= 1e-12);
        assert!((plain - naive_igd(&a, &z)).abs() <= 1e-12);
        assert!(plain >= plus);
    }
}

#[test]
fn worked_examples() {
    let z = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
    assert_eq!(igd_plus(&z, &z).unwrap(), 0.0);
    assert_eq!(igd_plus(&[vec![1.0, 1.0]], &[vec![0.0, 0.0]]).unwrap(), 2f64.sqrt());
    let a = vec![vec![0.5, 0.5], vec![2.0, 0.0]];
    assert_eq!(igd_plus(&a, &z).unwrap(), (0.5f64.sqrt() + 0.5) / 2.0);
    assert_eq!(igd(&[vec![3.0, 4.0]], &[vec![0.0, 0.0]]).unwrap(), 5.0);
}

#[test]
fn dominated_reference_points_cost_nothing() {
    let a = vec![vec![0.0, 0.0]];
    let z = vec![vec![1.0, 2.0], vec![3.0, 0.5]];
    assert_eq!(igd_plus(&a, &z).unwrap(), 0.0);
    assert!(igd(&a, &z).unwrap() > 0.0);
}
