use rand::Rng;
use serde::{Deserialize, Serialize};

/// Simulated binary crossover and polynomial mutation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub eta_c: f64,
    pub eta_m: f64,
    pub crossover_prob: f64,
    /// Per-variable mutation probability; `None` means `1 / d`.
    pub mutation_prob: Option<f64>,
}

impl Default for Variation {
    fn default() -> Self {
        Self {
            eta_c: 20.0,
            eta_m: 20.0,
            crossover_prob: 1.0,
            mutation_prob: None,
        }
    }
}

impl Variation {
    pub fn mutation_prob_for(&self, d: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / d.max(1) as f64)
    }

    /// Two children from two parents: crossover followed by mutation.
    pub fn offspring<R: Rng>(
        &self,
        p1: &[f64],
        p2: &[f64],
        bounds: &[(f64, f64)],
        rng: &mut R,
    ) -> (Vec<f64>, Vec<f64>) {
        let (c1, c2) = sbx_crossover(p1, p2, bounds, self.eta_c, self.crossover_prob, rng);
        let pm = self.mutation_prob_for(bounds.len());
        (
            polynomial_mutation(&c1, bounds, self.eta_m, pm, rng),
            polynomial_mutation(&c2, bounds, self.eta_m, pm, rng),
        )
    }
}

/// SBX on one variable pair for a given uniform draw `u`. The children's
/// mean equals the parents' mean.
pub fn sbx_pair(a: f64, b: f64, u: f64, eta: f64) -> (f64, f64) {
    let beta = if u <= 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
    };
    (
        0.5 * ((1.0 + beta) * a + (1.0 - beta) * b),
        0.5 * ((1.0 - beta) * a + (1.0 + beta) * b),
    )
}

/// Simulated binary crossover. Each variable is exchanged with probability
/// one half; children are clipped to `bounds`.
pub fn sbx_crossover<R: Rng>(
    p1: &[f64],
    p2: &[f64],
    bounds: &[(f64, f64)],
    eta: f64,
    prob: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() >= prob {
        return (c1, c2);
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if rng.gen::<f64>() > 0.5 || (p1[i] - p2[i]).abs() < 1e-14 {
            continue;
        }
        let (a, b) = sbx_pair(p1[i], p2[i], rng.gen(), eta);
        c1[i] = a.clamp(lo, hi);
        c2[i] = b.clamp(lo, hi);
    }
    (c1, c2)
}

/// Polynomial perturbation for a uniform draw `u`, as a fraction of the
/// variable range. Zero at `u = 0.5`.
pub fn polynomial_delta(u: f64, eta: f64) -> f64 {
    if u < 0.5 {
        (2.0 * u).powf(1.0 / (eta + 1.0)) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(1.0 / (eta + 1.0))
    }
}

pub fn polynomial_mutation<R: Rng>(
    x: &[f64],
    bounds: &[(f64, f64)],
    eta: f64,
    prob: f64,
    rng: &mut R,
) -> Vec<f64> {
    x.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| {
            if rng.gen::<f64>() < prob {
                (v + polynomial_delta(rng.gen(), eta) * (hi - lo)).clamp(lo, hi)
            } else {
                v
            }
        })
        .collect()
}
