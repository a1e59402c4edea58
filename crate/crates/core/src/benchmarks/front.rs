use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BenchmarkFamily, BenchmarkSpec, Dtlz, Wfg};
use crate::engine::simplex_lattice;
use crate::error::{Error, Result};
use crate::pareto::nondominated_filter;
use crate::problem::Objectives;

const FRONT_SEED: u64 = 0x5eed_f207;

/// Points sampled from a problem's Pareto front.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFront {
    pub points: Vec<Vec<f64>>,
    /// Set when the front was obtained by filtering an evaluated sample
    /// rather than from a closed form.
    pub approximate: bool,
    pub method: &'static str,
}

impl ReferenceFront {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "# method: {}", self.method).unwrap();
        writeln!(out, "# approximate: {}", self.approximate).unwrap();
        let m = self.points.first().map_or(0, Vec::len);
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record((1..=m).map(|i| format!("f{i}")))?;
        for p in &self.points {
            w.write_record(p.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Smallest lattice parameter whose simplex lattice has at least `count` points.
fn lattice_parameter(m: usize, count: usize) -> usize {
    let mut h = 1;
    while binomial(h + m - 1, m - 1) < count {
        h += 1;
    }
    h
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn unit_sphere_lattice(m: usize, count: usize) -> Vec<Vec<f64>> {
    simplex_lattice(m, lattice_parameter(m, count))
        .into_iter()
        .map(|p| {
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p.into_iter().map(|v| v / norm).collect()
        })
        .collect()
}

/// Grid over `[0, 1]^dim` for small `dim`, seeded uniform draws otherwise.
fn position_samples(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if dim <= 2 {
        let side = ((n as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
        let axis: Vec<f64> = (0..side).map(|i| i as f64 / (side - 1) as f64).collect();
        if dim == 1 {
            return axis.into_iter().map(|v| vec![v]).collect();
        }
        return axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect();
    }
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect()
}

/// Repeatedly densifies a filtered sample until it holds `count` points.
fn filtered_front<F>(m: usize, count: usize, mut map: F) -> Vec<Vec<f64>>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(FRONT_SEED);
    let mut factor = if m <= 3 { 4 } else { 2 };
    loop {
        let samples = position_samples(m - 1, factor * count, &mut rng);
        let evaluated: Vec<Vec<f64>> = samples.iter().map(|x| map(x)).collect();
        let front = nondominated_filter(&evaluated);
        if front.len() >= count || factor >= 64 {
            return front;
        }
        factor *= 2;
    }
}

fn linspace(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

/// Samples at least `count` points from the true (or, where flagged,
/// approximated) Pareto front of the benchmark.
pub fn sample_reference_front(spec: &BenchmarkSpec, count: usize) -> Result<ReferenceFront> {
    spec.validate()?;
    let m = spec.m;
    let count = count.max(2);
    let front = match spec.family {
        BenchmarkFamily::Dtlz(1) => ReferenceFront {
            points: simplex_lattice(m, lattice_parameter(m, count))
                .into_iter()
                .map(|p| p.into_iter().map(|v| 0.5 * v).collect())
                .collect(),
            approximate: false,
            method: "simplex lattice scaled to sum 0.5",
        },
        BenchmarkFamily::Dtlz(2..=4) => ReferenceFront {
            points: unit_sphere_lattice(m, count),
            approximate: false,
            method: "simplex lattice projected onto the unit sphere",
        },
        BenchmarkFamily::Dtlz(variant @ (5 | 6)) => {
            let problem = Dtlz::new(variant, m, spec.d);
            let opt = problem.optimal_distance_value();
            let curve = |t: f64| {
                let mut x = vec![opt; spec.d];
                x[0] = t;
                for v in x.iter_mut().take(m - 1).skip(1) {
                    *v = 0.5;
                }
                problem.evaluate(&x)
            };
            if m <= 3 {
                ReferenceFront {
                    points: linspace(count).map(curve).collect(),
                    approximate: false,
                    method: "degenerate curve",
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(FRONT_SEED);
                let mut sample: Vec<Vec<f64>> = linspace(count).map(curve).collect();
                for _ in 0..4 * count {
                    let x: Vec<f64> = (0..spec.d)
                        .map(|i| {
                            if i < m - 1 {
                                rng.gen::<f64>()
                            } else {
                                (opt + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0)
                            }
                        })
                        .collect();
                    sample.push(problem.evaluate(&x));
                }
                ReferenceFront {
                    points: nondominated_filter(&sample),
                    approximate: true,
                    method: "non-dominated filter of curve plus near-optimal sample",
                }
            }
        }
        BenchmarkFamily::Dtlz(_) => {
            let problem = Dtlz::new(7, m, spec.d);
            ReferenceFront {
                points: filtered_front(m, count, |pos| {
                    let mut x = vec![0.0; spec.d];
                    x[..m - 1].copy_from_slice(pos);
                    problem.evaluate(&x)
                }),
                approximate: false,
                method: "non-dominated filter of dense position sample",
            }
        }
        BenchmarkFamily::Wfg(variant) => {
            let k = spec.position_parameters().unwrap_or_default();
            let problem = Wfg::new(variant, m, spec.d, k);
            match variant {
                1 | 2 => ReferenceFront {
                    points: filtered_front(m, count, |pos| problem.shape(pos, 0.0)),
                    approximate: false,
                    method: "non-dominated filter of dense shape sample",
                },
                3 => {
                    debug_assert!(problem.is_degenerate());
                    ReferenceFront {
                        points: linspace(count)
                            .map(|t| {
                                let mut pos = vec![0.5; m - 1];
                                pos[0] = t;
                                problem.shape(&pos, 0.0)
                            })
                            .collect(),
                        approximate: false,
                        method: "degenerate linear front",
                    }
                }
                _ => ReferenceFront {
                    points: unit_sphere_lattice(m, count)
                        .into_iter()
                        .map(|p| {
                            p.into_iter()
                                .enumerate()
                                .map(|(i, v)| 2.0 * (i + 1) as f64 * v)
                                .collect()
                        })
                        .collect(),
                    approximate: false,
                    method: "simplex lattice projected onto the scaled sphere",
                },
            }
        }
    };
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::dominates;

    fn spec(family: BenchmarkFamily, m: usize) -> BenchmarkSpec {
        BenchmarkSpec::new(family, m, 10)
    }

    fn mutually_nondominated(points: &[Vec<f64>]) -> bool {
        points.iter().enumerate().all(|(i, a)| {
            points
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !dominates(b, a))
        })
    }

    #[test]
    fn dtlz2_front_on_unit_sphere() {
        let f = sample_reference_front(&spec(BenchmarkFamily::Dtlz(2), 3), 1000).unwrap();
        assert!(f.len() >= 1000);
        for p in &f.points {
            assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dtlz1_front_on_simplex() {
        let f = sample_reference_front(&spec(BenchmarkFamily::Dtlz(1), 3), 300).unwrap();
        for p in &f.points {
            assert!((p.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn dtlz7_front_is_nondominated() {
        let f = sample_reference_front(&spec(BenchmarkFamily::Dtlz(7), 3), 300).unwrap();
        assert!(f.len() >= 300);
        assert!(mutually_nondominated(&f.points));
    }

    #[test]
    fn dtlz5_curve() {
        let f = sample_reference_front(&spec(BenchmarkFamily::Dtlz(5), 3), 300).unwrap();
        assert_eq!(f.len(), 300);
        assert!(!f.approximate);
        assert!(mutually_nondominated(&f.points));
        for p in &f.points {
            assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let g = sample_reference_front(&spec(BenchmarkFamily::Dtlz(6), 5), 200).unwrap();
        assert!(g.approximate);
    }

    #[test]
    fn wfg_fronts_respect_scaling() {
        for v in 1..=9 {
            let f = sample_reference_front(&spec(BenchmarkFamily::Wfg(v), 3), 300).unwrap();
            assert!(f.len() >= 300, "WFG{v}: {}", f.len());
            for p in &f.points {
                for (i, &x) in p.iter().enumerate() {
                    assert!(x >= 0.0 && x <= 2.0 * (i + 1) as f64 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.csv");
        let f = sample_reference_front(&spec(BenchmarkFamily::Dtlz(1), 2), 10).unwrap();
        f.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert!(text.contains("f1,f2\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), f.len() + 1);
    }
}
