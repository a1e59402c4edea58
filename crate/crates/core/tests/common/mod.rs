//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use hetbo::acquisition::sbp_penalty;
use hetbo::benchmarks::{BenchmarkFamily, BenchmarkSpec};
use hetbo::gp::{GpConfig, GpModel, GpTrainingSet, LikelihoodSurface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROBLEMS: [&str; 16] = [
    "DTLZ1", "DTLZ2", "DTLZ3", "DTLZ4", "DTLZ5", "DTLZ6", "DTLZ7", "WFG1", "WFG2", "WFG3", "WFG4", "WFG5", "WFG6",
    "WFG7", "WFG8", "WFG9",
];

/// Decision vectors and objective values from `fixtures/<name>.csv`.
pub fn fixture(name: &str) -> Vec<(Vec<f64>, Vec<f64>)> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.csv"));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    reader
        .records()
        .map(|r| {
            let v: Vec<f64> = r.unwrap().iter().map(|s| s.parse().unwrap()).collect();
            (v[..10].to_vec(), v[10..].to_vec())
        })
        .collect()
}

pub fn fixture_spec(name: &str) -> BenchmarkSpec {
    let family: BenchmarkFamily = name.parse().unwrap();
    let s = BenchmarkSpec::new(family, 3, 10);
    match family {
        BenchmarkFamily::Wfg(_) => s.with_k(4),
        BenchmarkFamily::Dtlz(_) => s,
    }
}

/// Largest relative error of our implementation over the fixture points.
pub fn benchmark_relative_error(name: &str) -> f64 {
    let objectives = fixture_spec(name).objectives().unwrap();
    let mut worst: f64 = 0.0;
    for (x, expected) in fixture(name) {
        for (g, e) in objectives.evaluate(&x).iter().zip(&expected) {
            worst = worst.max((g - e).abs() / e.abs().max(1e-12));
        }
    }
    worst
}

/// Largest deviation from the closed-form front identities: points on the
/// DTLZ1 front sum to 1/2, points on the DTLZ2 front have unit norm.
pub fn pareto_identity_error(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (name, m) in [("DTLZ1", 3), ("DTLZ1", 5), ("DTLZ2", 3), ("DTLZ2", 5)] {
        let d = m + 6;
        let spec = BenchmarkSpec::new(name.parse().unwrap(), m, d);
        let objectives = spec.objectives().unwrap();
        for _ in 0..samples {
            let mut x: Vec<f64> = (0..m - 1).map(|_| rng.gen::<f64>()).collect();
            // distance variables at 0.5 zero out g
            x.resize(d, 0.5);
            let f = objectives.evaluate(&x);
            let err = if name == "DTLZ1" {
                (f.iter().sum::<f64>() - 0.5).abs()
            } else {
                (f.iter().map(|v| v * v).sum::<f64>() - 1.0).abs()
            };
            worst = worst.max(err);
        }
    }
    worst
}

pub fn naive_igd_plus(a: &[Vec<f64>], z: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for zp in z {
        let mut best = f64::INFINITY;
        for ap in a {
            let mut s = 0.0;
            for k in 0..zp.len() {
                let diff = ap[k] - zp[k];
                if diff > 0.0 {
                    s += diff * diff;
                }
            }
            best = best.min(s.sqrt());
        }
        total += best;
    }
    total / z.len() as f64
}

pub fn naive_igd(a: &[Vec<f64>], z: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for zp in z {
        let mut best = f64::INFINITY;
        for ap in a {
            let mut s = 0.0;
            for k in 0..zp.len() {
                s += (ap[k] - zp[k]) * (ap[k] - zp[k]);
            }
            best = best.min(s.sqrt());
        }
        total += best;
    }
    total / z.len() as f64
}

/// `count` random (A, Z) pairs with m in 2..=5 and up to 40 points each.
pub fn random_indicator_instances(count: usize, seed: u64) -> Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let m = rng.gen_range(2..=5);
            let na = rng.gen_range(1..40);
            let nz = rng.gen_range(1..40);
            let mut set = |n: usize| -> Vec<Vec<f64>> {
                (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..3.0)).collect()).collect()
            };
            let a = set(na);
            (a, set(nz))
        })
        .collect()
}

fn smooth(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + x[1] * x[1] - 0.5 * x[2] + (x[0] * x[2]).cos()
}

fn rough(x: &[f64]) -> f64 {
    (6.0 * x[0]).sin() + (5.0 * x[1]).cos() + x[2]
}

/// Largest |mean - y| at the training points of a fitted model. The
/// residual at a training point is nugget * |weight|, so the target is kept
/// rough enough for the correlation matrix to stay well conditioned.
pub fn gp_interpolation_error() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inputs: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
    let targets: Vec<f64> = inputs.iter().map(|x| rough(x)).collect();
    let data = GpTrainingSet::new(inputs.clone(), targets.clone()).unwrap();
    let config = GpConfig {
        nugget: 1e-8,
        ..GpConfig::default()
    };
    let model = GpModel::fit(&data, &config).unwrap();
    inputs
        .iter()
        .zip(&targets)
        .map(|(x, y)| (model.predict(x).mean - y).abs())
        .fold(0.0, f64::max)
}

/// Two training points at 0 and 1 with a fixed length scale. After
/// standardization the targets are (-1, 1), so with rho = k(0, 1) the
/// weights are (-1, 1) / (1 + g - rho) and the mean at `t` is
/// `ybar + (y1 - y0) / 2 * (k(t, 1) - k(t, 0)) / (1 + g - rho)`.
pub fn gp_two_point_error() -> f64 {
    let (y0, y1, ell, g) = (0.3, 2.1, 0.4, 1e-8);
    let data = GpTrainingSet::new(vec![vec![0.0], vec![1.0]], vec![y0, y1]).unwrap();
    let model = GpModel::with_hyperparameters(&data, &[ell], g).unwrap();
    let k = |a: f64, b: f64| (-(a - b) * (a - b) / (2.0 * ell * ell)).exp();
    let rho = k(0.0, 1.0);
    [0.0, 0.25, 0.5, 0.8, 1.0, 1.7]
        .iter()
        .map(|&t| {
            let expected = 0.5 * (y0 + y1) + 0.5 * (y1 - y0) * (k(t, 1.0) - k(t, 0.0)) / (1.0 + g - rho);
            (model.predict(&[t]).mean - expected).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest relative gap between the analytic likelihood gradient and
/// central differences at `points` random log length scales.
pub fn gp_gradient_error(points: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inputs: Vec<Vec<f64>> = (0..25).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
    let raw: Vec<f64> = inputs.iter().map(|x| smooth(x)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
    let y: Vec<f64> = raw.iter().map(|v| (v - mean) / sd).collect();
    let surface = LikelihoodSurface::new(&inputs, &y);
    let nugget = 1e-6;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let r: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5f64..0.5)).collect();
        let (_, grad) = surface.value_and_gradient(&r, nugget).unwrap();
        let scale = grad.iter().map(|g| g.abs()).fold(1e-3, f64::max);
        for k in 0..3 {
            let mut up = r.clone();
            let mut down = r.clone();
            up[k] += h;
            down[k] -= h;
            let fd = (surface.value(&up, nugget).unwrap() - surface.value(&down, nugget).unwrap()) / (2.0 * h);
            worst = worst.max((grad[k] - fd).abs() / scale);
        }
    }
    worst
}

/// Max over a 101 x 101 grid of normalized means of the cheap-to-expensive
/// penalty ratio, for ratios (5, 1).
pub fn max_penalty_ratio(itrn: usize) -> f64 {
    let weights = [5.0 / 6.0, 1.0 / 6.0];
    let mut best: f64 = 0.0;
    for a in 0..=100 {
        for b in 0..=100 {
            let p = sbp_penalty(&[a as f64 / 100.0, b as f64 / 100.0], itrn, &weights);
            best = best.max(p[0] / p[1]);
        }
    }
    best
}
