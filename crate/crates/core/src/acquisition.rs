//! Adaptive and search-bias-penalized acquisition functions.
//!
//! Both are vector valued: every component is minimized by the
//! reference-vector selection that consumes them.

use crate::error::{Error, Result};

/// Floor applied to the `mu_max` and `sigma_max` divisors.
pub const DIVISOR_FLOOR: f64 = 1e-12;

/// Cosine schedule moving the acquisition from exploitation (0) to
/// exploration (1) as the budget is spent.
pub fn adaptation_alpha(fe: usize, fe_max: usize) -> Result<f64> {
    if fe_max == 0 {
        return Err(Error::Domain("fe_max must be positive".into()));
    }
    let ratio = (fe as f64 / fe_max as f64).clamp(0.0, 1.0);
    Ok(-0.5 * (std::f64::consts::PI * ratio).cos() + 0.5)
}

/// Weights `w_i = r_i / sum(r)`.
pub fn ratio_weights(ratios: &[u32]) -> Vec<f64> {
    let total: f64 = ratios.iter().map(|&r| r as f64).sum();
    ratios.iter().map(|&r| r as f64 / total).collect()
}

/// Per-objective statistics of the population being scored.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStats {
    pub mu_max: Vec<f64>,
    pub sigma_max: Vec<f64>,
    pub mu_min: Vec<f64>,
}

impl PopulationStats {
    pub fn from_predictions(means: &[Vec<f64>], stds: &[Vec<f64>]) -> Result<Self> {
        let m = means.first().ok_or(Error::Empty("scored population"))?.len();
        let mut stats = Self {
            mu_max: vec![f64::NEG_INFINITY; m],
            sigma_max: vec![f64::NEG_INFINITY; m],
            mu_min: vec![f64::INFINITY; m],
        };
        for (mu, sigma) in means.iter().zip(stds) {
            if mu.len() != m || sigma.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    got: mu.len().min(sigma.len()),
                });
            }
            for k in 0..m {
                stats.mu_max[k] = stats.mu_max[k].max(mu[k]);
                stats.mu_min[k] = stats.mu_min[k].min(mu[k]);
                stats.sigma_max[k] = stats.sigma_max[k].max(sigma[k]);
            }
        }
        Ok(stats)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionContext {
    pub fe_current: usize,
    pub fe_max: usize,
    /// BO iteration number, starting at 1.
    pub itrn: usize,
    pub weights: Vec<f64>,
    pub stats: PopulationStats,
    /// Disables the penalty (adaptive acquisition only).
    pub penalty_disabled: bool,
}

impl AcquisitionContext {
    pub fn alpha(&self) -> Result<f64> {
        adaptation_alpha(self.fe_current, self.fe_max)
    }
}

/// Component-wise acquisition values of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionScore {
    pub values: Vec<f64>,
    pub penalty: Vec<f64>,
}

/// `(1 - alpha) * mu / mu_max + alpha * sigma / sigma_max`.
pub fn af_adaptive(mu: &[f64], sigma: &[f64], alpha: f64, stats: &PopulationStats) -> Vec<f64> {
    mu.iter()
        .zip(sigma)
        .enumerate()
        .map(|(k, (&m, &s))| {
            let mu_div = floored(stats.mu_max[k]);
            let sigma_div = floored(stats.sigma_max[k]);
            (1.0 - alpha) * m / mu_div + alpha * s / sigma_div
        })
        .collect()
}

// The floor keeps the sign so negative maxima do not flip the ordering.
fn floored(v: f64) -> f64 {
    if v.abs() < DIVISOR_FLOOR {
        if v < 0.0 {
            -DIVISOR_FLOOR
        } else {
            DIVISOR_FLOOR
        }
    } else {
        v
    }
}

/// Min-max normalization over the scored population; flat components map to 0.
pub fn normalize_means(mu: &[f64], stats: &PopulationStats) -> Vec<f64> {
    mu.iter()
        .enumerate()
        .map(|(k, &v)| {
            let range = stats.mu_max[k] - stats.mu_min[k];
            if range > 0.0 {
                ((v - stats.mu_min[k]) / range).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect()
}

/// Rate `lambda_i = 1 / (w_i * itrn + 1)`.
pub fn penalty_rate(weight: f64, itrn: usize) -> f64 {
    1.0 / (weight * itrn as f64 + 1.0)
}

/// Search-bias penalty `1 - lambda_i * exp(-lambda_i * mu_bar_i)`.
pub fn sbp_penalty(mu_bar: &[f64], itrn: usize, weights: &[f64]) -> Vec<f64> {
    mu_bar
        .iter()
        .zip(weights)
        .map(|(&v, &w)| {
            let lambda = penalty_rate(w, itrn);
            1.0 - lambda * (-lambda * v).exp()
        })
        .collect()
}

/// Adaptive acquisition multiplied component-wise by the penalty.
pub fn af_sbp(mu: &[f64], sigma: &[f64], ctx: &AcquisitionContext) -> Result<AcquisitionScore> {
    let adaptive = af_adaptive(mu, sigma, ctx.alpha()?, &ctx.stats);
    let penalty = if ctx.penalty_disabled {
        vec![1.0; mu.len()]
    } else {
        sbp_penalty(&normalize_means(mu, &ctx.stats), ctx.itrn.max(1), &ctx.weights)
    };
    let values = adaptive.iter().zip(&penalty).map(|(a, p)| a * p).collect();
    Ok(AcquisitionScore { values, penalty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stats(mu_max: Vec<f64>, sigma_max: Vec<f64>, mu_min: Vec<f64>) -> PopulationStats {
        PopulationStats { mu_max, sigma_max, mu_min }
    }

    #[test]
    fn alpha_schedule() {
        assert_eq!(adaptation_alpha(0, 10).unwrap(), 0.0);
        assert!((adaptation_alpha(10, 10).unwrap() - 1.0).abs() < 1e-15);
        assert!((adaptation_alpha(5, 10).unwrap() - 0.5).abs() < 1e-15);
        assert!(adaptation_alpha(1, 0).is_err());
    }

    #[test]
    fn adaptive_examples() {
        let s = stats(vec![2.0, 4.0], vec![0.2, 0.4], vec![0.0, 0.0]);
        let a = af_adaptive(&[1.0, 2.0], &[0.1, 0.2], 0.5, &s);
        assert!((a[0] - 0.5).abs() < 1e-15 && (a[1] - 0.5).abs() < 1e-15);
        let fixed = af_adaptive(&[2.0, 4.0], &[0.2, 0.4], 0.3, &s);
        assert!(fixed.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert_eq!(af_adaptive(&[1.0, 2.0], &[0.1, 0.2], 0.0, &s), vec![0.5, 0.5]);
    }

    #[test]
    fn zero_maxima_are_floored() {
        let s = stats(vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(af_adaptive(&[0.0, 0.0], &[0.0, 0.0], 0.5, &s).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn normalization_edges() {
        let s = stats(vec![3.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]);
        assert_eq!(normalize_means(&[1.0, 1.0], &s), vec![0.0, 0.0]);
        assert_eq!(normalize_means(&[3.0, 1.0], &s), vec![1.0, 0.0]);
    }

    #[test]
    fn penalty_fixtures() {
        let w = ratio_weights(&[5, 1]);
        let p = sbp_penalty(&[0.0, 0.0], 1, &w);
        assert!((p[0] - 5.0 / 11.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 7.0).abs() < 1e-12);
        let q = sbp_penalty(&[1.0, 1.0], 1, &w);
        assert!((q[0] - (1.0 - 6.0 / 11.0 * (-6.0f64 / 11.0).exp())).abs() < 1e-12);
        assert!((q[0] - 0.683866).abs() < 1e-6);
        let late = sbp_penalty(&[0.3, 0.7], 1_000_000, &w);
        assert!(late.iter().all(|v| (v - 1.0).abs() < 1e-5));
    }

    #[test]
    fn disabled_penalty_returns_adaptive() {
        let ctx = AcquisitionContext {
            fe_current: 120,
            fe_max: 300,
            itrn: 1,
            weights: ratio_weights(&[5, 1]),
            stats: stats(vec![2.0, 3.0], vec![0.5, 0.5], vec![0.0, 1.0]),
            penalty_disabled: true,
        };
        let score = af_sbp(&[1.0, 2.0], &[0.2, 0.1], &ctx).unwrap();
        let alpha = ctx.alpha().unwrap();
        assert_eq!(score.values, af_adaptive(&[1.0, 2.0], &[0.2, 0.1], alpha, &ctx.stats));
        assert_eq!(score.penalty, vec![1.0, 1.0]);
    }

    #[test]
    fn expensive_component_is_favoured_early() {
        let ctx = AcquisitionContext {
            fe_current: 0,
            fe_max: 300,
            itrn: 1,
            weights: ratio_weights(&[5, 1]),
            stats: stats(vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]),
            penalty_disabled: false,
        };
        let s = af_sbp(&[1.0, 1.0], &[0.0, 0.0], &ctx).unwrap();
        assert!((s.values[0] - 5.0 / 11.0).abs() < 1e-12);
        assert!((s.values[1] - 1.0 / 7.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn penalty_in_open_unit_interval(v in 0.0f64..=1.0, w in 0.01f64..1.0, itrn in 1usize..500) {
            let p = sbp_penalty(&[v], itrn, &[w])[0];
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert!((p - 1.0).abs() <= penalty_rate(w, itrn) + 1e-15);
        }

        #[test]
        fn adaptive_is_monotone(mu in 0.0f64..5.0, sigma in 0.0f64..5.0, dm in 0.0f64..1.0, ds in 0.0f64..1.0, alpha in 0.0f64..=1.0) {
            let s = stats(vec![6.0], vec![6.0], vec![0.0]);
            let a = af_adaptive(&[mu], &[sigma], alpha, &s)[0];
            let b = af_adaptive(&[mu + dm], &[sigma + ds], alpha, &s)[0];
            prop_assert!(b >= a - 1e-15);
        }

        #[test]
        fn penalized_never_exceeds_adaptive(mu in proptest::collection::vec(0.0f64..3.0, 3), sigma in proptest::collection::vec(0.0f64..1.0, 3), itrn in 1usize..100) {
            let ctx = AcquisitionContext {
                fe_current: 150,
                fe_max: 300,
                itrn,
                weights: ratio_weights(&[5, 5, 1]),
                stats: stats(vec![3.0; 3], vec![1.0; 3], vec![0.0; 3]),
                penalty_disabled: false,
            };
            let plain = af_adaptive(&mu, &sigma, ctx.alpha().unwrap(), &ctx.stats);
            let pen = af_sbp(&mu, &sigma, &ctx).unwrap();
            for (p, a) in pen.values.iter().zip(&plain) {
                prop_assert!(*p <= *a + 1e-15);
            }
        }
    }
}
