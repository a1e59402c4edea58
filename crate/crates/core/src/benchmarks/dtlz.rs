use std::f64::consts::{FRAC_PI_2, PI};

use crate::problem::Objectives;

/// DTLZ1–DTLZ7 over `[0, 1]^d`. The last `d - m + 1` variables are the
/// distance variables.
#[derive(Debug, Clone)]
pub struct Dtlz {
    variant: u8,
    m: usize,
    bounds: Vec<(f64, f64)>,
}

const DTLZ4_ALPHA: i32 = 100;

impl Dtlz {
    pub(crate) fn new(variant: u8, m: usize, d: usize) -> Self {
        debug_assert!((1..=7).contains(&variant) && d >= m && m >= 2);
        Self {
            variant,
            m,
            bounds: vec![(0.0, 1.0); d],
        }
    }

    fn k(&self) -> usize {
        self.bounds.len() - self.m + 1
    }

    /// Value of the distance variables at which `g` is minimal.
    pub(crate) fn optimal_distance_value(&self) -> f64 {
        match self.variant {
            6 | 7 => 0.0,
            _ => 0.5,
        }
    }

    fn g(&self, tail: &[f64]) -> f64 {
        match self.variant {
            1 | 3 => {
                let s: f64 = tail
                    .iter()
                    .map(|&x| (x - 0.5).powi(2) - (20.0 * PI * (x - 0.5)).cos())
                    .sum();
                100.0 * (tail.len() as f64 + s)
            }
            2 | 4 | 5 => tail.iter().map(|&x| (x - 0.5).powi(2)).sum(),
            6 => tail.iter().map(|&x| x.powf(0.1)).sum(),
            7 => 1.0 + 9.0 / self.k() as f64 * tail.iter().sum::<f64>(),
            _ => unreachable!(),
        }
    }
}

/// Spherical front mapping; `angles` are fractions of a right angle.
fn sphere(angles: &[f64], radius: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let mut f = radius;
            for a in &angles[..m - 1 - i] {
                f *= (a * FRAC_PI_2).cos();
            }
            if i > 0 {
                f *= (angles[m - 1 - i] * FRAC_PI_2).sin();
            }
            f
        })
        .collect()
}

impl Objectives for Dtlz {
    fn num_objectives(&self) -> usize {
        self.m
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let (head, tail) = x.split_at(m - 1);
        let g = self.g(tail);
        match self.variant {
            1 => (0..m)
                .map(|i| {
                    let mut f = 0.5 * (1.0 + g);
                    for &v in &head[..m - 1 - i] {
                        f *= v;
                    }
                    if i > 0 {
                        f *= 1.0 - head[m - 1 - i];
                    }
                    f
                })
                .collect(),
            2 | 3 => sphere(head, 1.0 + g, m),
            4 => {
                let warped: Vec<f64> = head.iter().map(|v| v.powi(DTLZ4_ALPHA)).collect();
                sphere(&warped, 1.0 + g, m)
            }
            5 | 6 => {
                let mut theta = Vec::with_capacity(m - 1);
                theta.push(head[0]);
                theta.extend(
                    head[1..]
                        .iter()
                        .map(|&v| (1.0 + 2.0 * g * v) / (2.0 * (1.0 + g))),
                );
                sphere(&theta, 1.0 + g, m)
            }
            7 => {
                let h = m as f64
                    - head
                        .iter()
                        .map(|&f| f / (1.0 + g) * (1.0 + (3.0 * PI * f).sin()))
                        .sum::<f64>();
                let mut f = head.to_vec();
                f.push((1.0 + g) * h);
                f
            }
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtlz2_midpoint_lies_on_unit_sphere() {
        let p = Dtlz::new(2, 3, 10);
        let f = p.evaluate(&[0.5; 10]);
        let s: f64 = f.iter().map(|v| v * v).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((f[0] - (0.25 * PI).cos().powi(2)).abs() < 1e-12);
        assert!((f[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dtlz1_with_optimal_distance_sums_to_half() {
        let p = Dtlz::new(1, 3, 10);
        let mut x = vec![0.5; 10];
        x[0] = 0.1;
        x[1] = 0.8;
        let f = p.evaluate(&x);
        assert!((f.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dtlz7_last_objective_formula() {
        let p = Dtlz::new(7, 2, 3);
        // g = 1 and h = 2 at the origin
        let f = p.evaluate(&[0.0, 0.0, 0.0]);
        assert_eq!(f, vec![0.0, 4.0]);
    }
}
