use std::f64::consts::{FRAC_PI_2, PI};

use crate::problem::Objectives;

/// WFG1–WFG9. Variable `i` (0-based) ranges over `[0, 2(i + 1)]`; the
/// first `k` variables are position parameters.
#[derive(Debug, Clone)]
pub struct Wfg {
    variant: u8,
    m: usize,
    k: usize,
    bounds: Vec<(f64, f64)>,
}

const PARAM_A: f64 = 0.98 / 49.98;
const PARAM_B: f64 = 0.02;
const PARAM_C: f64 = 50.0;

impl Wfg {
    pub(crate) fn new(variant: u8, m: usize, d: usize, k: usize) -> Self {
        debug_assert!((1..=9).contains(&variant) && k % (m - 1) == 0 && k < d);
        Self {
            variant,
            m,
            k,
            bounds: (0..d).map(|i| (0.0, 2.0 * (i as f64 + 1.0))).collect(),
        }
    }

    pub fn position_parameters(&self) -> usize {
        self.k
    }

    /// Reduces the normalized variables to the `m` underlying parameters.
    fn reduce(&self, mut y: Vec<f64>) -> Vec<f64> {
        let n = y.len();
        let k = self.k;
        let m = self.m;
        let gap = k / (m - 1);
        match self.variant {
            1 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                for v in &mut y[k..] {
                    *v = b_flat(*v, 0.8, 0.75, 0.85);
                }
                for v in &mut y {
                    *v = b_poly(*v, 0.02);
                }
                let w: Vec<f64> = (0..n).map(|i| 2.0 * (i as f64 + 1.0)).collect();
                let mut t: Vec<f64> = (0..m - 1)
                    .map(|g| r_sum(&y[g * gap..(g + 1) * gap], &w[g * gap..(g + 1) * gap]))
                    .collect();
                t.push(r_sum(&y[k..], &w[k..]));
                t
            }
            2 | 3 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                let l = n - k;
                let mut z: Vec<f64> = y[..k].to_vec();
                for pair in 0..l / 2 {
                    let start = k + 2 * pair;
                    z.push(r_nonsep(&y[start..start + 2], 2));
                }
                let mut t: Vec<f64> = (0..m - 1)
                    .map(|g| mean(&z[g * gap..(g + 1) * gap]))
                    .collect();
                t.push(mean(&z[k..]));
                t
            }
            4 | 5 => {
                for v in &mut y {
                    *v = if self.variant == 4 {
                        s_multi(*v, 30.0, 10.0, 0.35)
                    } else {
                        s_decept(*v, 0.35, 0.001, 0.05)
                    };
                }
                uniform_groups(&y, k, gap, m)
            }
            6 => {
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                nonsep_groups(&y, k, gap, m)
            }
            7 => {
                let orig = y.clone();
                for i in 0..k {
                    y[i] = b_param(orig[i], mean(&orig[i + 1..]), PARAM_A, PARAM_B, PARAM_C);
                }
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                uniform_groups(&y, k, gap, m)
            }
            8 => {
                let orig = y.clone();
                for i in k..n {
                    y[i] = b_param(orig[i], mean(&orig[..i]), PARAM_A, PARAM_B, PARAM_C);
                }
                for v in &mut y[k..] {
                    *v = s_linear(*v, 0.35);
                }
                uniform_groups(&y, k, gap, m)
            }
            9 => {
                let orig = y.clone();
                for i in 0..n - 1 {
                    y[i] = b_param(orig[i], mean(&orig[i + 1..]), PARAM_A, PARAM_B, PARAM_C);
                }
                for (i, v) in y.iter_mut().enumerate() {
                    *v = if i < k {
                        s_decept(*v, 0.35, 0.001, 0.05)
                    } else {
                        s_multi(*v, 30.0, 95.0, 0.35)
                    };
                }
                nonsep_groups(&y, k, gap, m)
            }
            _ => unreachable!(),
        }
    }

    /// Degeneracy constants of the post-transformation.
    fn degeneracy(&self) -> Vec<f64> {
        let mut a = vec![1.0; self.m - 1];
        if self.variant == 3 {
            for v in a.iter_mut().skip(1) {
                *v = 0.0;
            }
        }
        a
    }

    /// Objective vector for position parameters `x` (length `m - 1`, in
    /// `[0, 1]`) and distance parameter `distance`.
    pub(crate) fn shape(&self, x: &[f64], distance: f64) -> Vec<f64> {
        let m = self.m;
        (0..m)
            .map(|i| {
                let idx = i + 1;
                let h = match self.variant {
                    1 if idx == m => mixed(x[0], 5.0, 1.0),
                    2 if idx == m => disc(x[0], 1.0, 1.0, 5.0),
                    1 | 2 => convex(x, idx),
                    3 => linear(x, idx),
                    _ => concave(x, idx),
                };
                distance + 2.0 * idx as f64 * h
            })
            .collect()
    }

    pub(crate) fn is_degenerate(&self) -> bool {
        self.variant == 3
    }
}

impl Objectives for Wfg {
    fn num_objectives(&self) -> usize {
        self.m
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let y: Vec<f64> = x
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(_, hi))| v / hi)
            .collect();
        let t = self.reduce(y);
        let last = t[self.m - 1];
        let positions: Vec<f64> = self
            .degeneracy()
            .iter()
            .zip(&t)
            .map(|(&a, &ti)| last.max(a) * (ti - 0.5) + 0.5)
            .collect();
        self.shape(&positions, last)
    }
}

fn uniform_groups(y: &[f64], k: usize, gap: usize, m: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..m - 1)
        .map(|g| mean(&y[g * gap..(g + 1) * gap]))
        .collect();
    t.push(mean(&y[k..]));
    t
}

fn nonsep_groups(y: &[f64], k: usize, gap: usize, m: usize) -> Vec<f64> {
    let mut t: Vec<f64> = (0..m - 1)
        .map(|g| r_nonsep(&y[g * gap..(g + 1) * gap], gap))
        .collect();
    t.push(r_nonsep(&y[k..], y.len() - k));
    t
}

fn correct_to_01(v: f64) -> f64 {
    const EPS: f64 = 1e-10;
    if v < 0.0 && v >= -EPS {
        0.0
    } else if v > 1.0 && v <= 1.0 + EPS {
        1.0
    } else {
        v
    }
}

fn mean(y: &[f64]) -> f64 {
    correct_to_01(y.iter().sum::<f64>() / y.len() as f64)
}

fn s_linear(y: f64, a: f64) -> f64 {
    correct_to_01((y - a).abs() / ((a - y).floor() + a).abs())
}

fn s_decept(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let t1 = (y - a + b).floor() * (1.0 - c + (a - b) / b) / (a - b);
    let t2 = (a + b - y).floor() * (1.0 - c + (1.0 - a - b) / b) / (1.0 - a - b);
    correct_to_01(1.0 + ((y - a).abs() - b) * (t1 + t2 + 1.0 / b))
}

fn s_multi(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let t1 = (y - c).abs() / (2.0 * ((c - y).floor() + c));
    let t2 = (4.0 * a + 2.0) * PI * (0.5 - t1);
    correct_to_01((1.0 + t2.cos() + 4.0 * b * t1 * t1) / (b + 2.0))
}

fn b_flat(y: f64, a: f64, b: f64, c: f64) -> f64 {
    let v = a + (y - b).floor().min(0.0) * (a * (b - y) / b)
        - (c - y).floor().min(0.0) * ((1.0 - a) * (y - c) / (1.0 - c));
    correct_to_01(v)
}

fn b_poly(y: f64, alpha: f64) -> f64 {
    correct_to_01(y.powf(alpha))
}

fn b_param(y: f64, u: f64, a: f64, b: f64, c: f64) -> f64 {
    let v = a - (1.0 - 2.0 * u) * ((0.5 - u).floor() + a).abs();
    correct_to_01(y.powf(b + (c - b) * v))
}

fn r_sum(y: &[f64], w: &[f64]) -> f64 {
    let num: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum();
    correct_to_01(num / w.iter().sum::<f64>())
}

fn r_nonsep(y: &[f64], a: usize) -> f64 {
    let len = y.len();
    let mut num = 0.0;
    for j in 0..len {
        num += y[j];
        for k in 0..a.saturating_sub(1) {
            num += (y[j] - y[(1 + j + k) % len]).abs();
        }
    }
    let half = (a as f64 / 2.0).ceil();
    let denom = len as f64 * half * (1.0 + 2.0 * a as f64 - 2.0 * half) / a as f64;
    correct_to_01(num / denom)
}

// Shape functions: `x` holds the m - 1 position parameters, `idx` is the
// 1-based objective index.

fn linear(x: &[f64], idx: usize) -> f64 {
    let p = x.len();
    let v = if idx == 1 {
        x.iter().product()
    } else if idx <= p {
        x[..p - idx + 1].iter().product::<f64>() * (1.0 - x[p - idx + 1])
    } else {
        1.0 - x[0]
    };
    correct_to_01(v)
}

fn convex(x: &[f64], idx: usize) -> f64 {
    let p = x.len();
    let c = |v: f64| 1.0 - (v * FRAC_PI_2).cos();
    let v = if idx == 1 {
        x.iter().map(|&v| c(v)).product()
    } else if idx <= p {
        x[..p - idx + 1].iter().map(|&v| c(v)).product::<f64>()
            * (1.0 - (x[p - idx + 1] * FRAC_PI_2).sin())
    } else {
        1.0 - (x[0] * FRAC_PI_2).sin()
    };
    correct_to_01(v)
}

fn concave(x: &[f64], idx: usize) -> f64 {
    let p = x.len();
    let v = if idx == 1 {
        x.iter().map(|&v| (v * FRAC_PI_2).sin()).product()
    } else if idx <= p {
        x[..p - idx + 1]
            .iter()
            .map(|&v| (v * FRAC_PI_2).sin())
            .product::<f64>()
            * (x[p - idx + 1] * FRAC_PI_2).cos()
    } else {
        (x[0] * FRAC_PI_2).cos()
    };
    correct_to_01(v)
}

fn mixed(x: f64, a: f64, alpha: f64) -> f64 {
    let aux = 2.0 * a * PI;
    correct_to_01((1.0 - x - (aux * x + FRAC_PI_2).cos() / aux).powf(alpha))
}

fn disc(x: f64, alpha: f64, beta: f64, a: f64) -> f64 {
    let aux = (a * PI * x.powf(beta)).cos();
    correct_to_01(1.0 - x.powf(alpha) * aux * aux)
}
