//! Gaussian-process regression with an anisotropic squared-exponential
//! kernel.
//!
//! Inputs are expected in the unit cube and targets are standardized
//! internally. The process variance is profiled out of the likelihood, so
//! only the length scales are searched: a multi-start projected-gradient
//! ascent on the concentrated log marginal likelihood in log-length space.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs closer than this (max-norm) are merged before fitting.
pub const DEDUP_TOLERANCE: f64 = 1e-10;

/// Training inputs (unit cube) and one objective's targets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GpTrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl GpTrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Dimension {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        if let Some(d) = inputs.first().map(Vec::len) {
            if let Some(bad) = inputs.iter().find(|x| x.len() != d) {
                return Err(Error::Dimension {
                    expected: d,
                    got: bad.len(),
                });
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.inputs.push(x);
        self.targets.push(y);
    }

    pub fn extend(&mut self, other: &GpTrainingSet) {
        self.inputs.extend(other.inputs.iter().cloned());
        self.targets.extend_from_slice(&other.targets);
    }

    /// Merges inputs within [`DEDUP_TOLERANCE`], averaging their targets.
    pub fn deduplicated(&self) -> GpTrainingSet {
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.len());
        let mut sums: Vec<(f64, usize)> = Vec::with_capacity(self.len());
        for (x, &y) in self.inputs.iter().zip(&self.targets) {
            let found = inputs.iter().position(|u| {
                u.iter()
                    .zip(x)
                    .all(|(a, b)| (a - b).abs() <= DEDUP_TOLERANCE)
            });
            match found {
                Some(i) => {
                    sums[i].0 += y;
                    sums[i].1 += 1;
                }
                None => {
                    inputs.push(x.clone());
                    sums.push((y, 1));
                }
            }
        }
        GpTrainingSet {
            inputs,
            targets: sums.into_iter().map(|(s, c)| s / c as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub nugget: f64,
    pub max_nugget: f64,
    pub min_length_scale: f64,
    pub max_length_scale: f64,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 60,
            nugget: 1e-8,
            max_nugget: 1e-4,
            min_length_scale: 1e-3,
            max_length_scale: 1e2,
            seed: 0x6a09_e667,
        }
    }
}

/// Predictive mean and standard deviation in the original target scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

/// Concentrated log likelihood of a fixed (deduplicated, standardized) data
/// set as a function of log length scales.
pub struct LikelihoodSurface {
    n: usize,
    d: usize,
    y: Vec<f64>,
    /// Squared coordinate differences for each pair i < j, laid out as
    /// `pair * d + k`.
    sq_diff: Vec<f64>,
}

struct Factorization {
    /// Packed lower triangles of the correlation matrix and its factor.
    corr: Vec<f64>,
    lower: Vec<f64>,
    alpha: Vec<f64>,
    sigma2: f64,
    value: f64,
}

impl LikelihoodSurface {
    /// `inputs` must be deduplicated; `y` standardized.
    pub fn new(inputs: &[Vec<f64>], y: &[f64]) -> Self {
        let n = inputs.len();
        let d = inputs.first().map_or(0, Vec::len);
        let mut sq_diff = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..d {
                    let diff = inputs[i][k] - inputs[j][k];
                    sq_diff.push(diff * diff);
                }
            }
        }
        Self {
            n,
            d,
            y: y.to_vec(),
            sq_diff,
        }
    }

    /// Correlation matrix as a packed lower triangle.
    fn correlation(&self, log_lengths: &[f64], nugget: f64) -> Vec<f64> {
        let inv: Vec<f64> = log_lengths
            .iter()
            .map(|&r| 0.5 * (-2.0 * r).exp())
            .collect();
        let n = self.n;
        let mut corr = vec![0.0; n * (n + 1) / 2];
        let mut pair = 0;
        for i in 0..n {
            corr[row_start(i) + i] = 1.0 + nugget;
            for j in (i + 1)..n {
                let row = &self.sq_diff[pair * self.d..(pair + 1) * self.d];
                let q: f64 = row.iter().zip(&inv).map(|(a, b)| a * b).sum();
                corr[row_start(j) + i] = (-q).exp();
                pair += 1;
            }
        }
        corr
    }

    fn factor(&self, log_lengths: &[f64], nugget: f64) -> Option<Factorization> {
        let corr = self.correlation(log_lengths, nugget);
        let mut lower = corr.clone();
        if !cholesky_in_place(&mut lower, self.n) {
            return None;
        }
        let alpha = cholesky_solve(&lower, self.n, &self.y);
        let sigma2 = dot(&self.y, &alpha) / self.n as f64;
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return None;
        }
        let log_det: f64 = 2.0 * (0..self.n).map(|i| lower[row_start(i) + i].ln()).sum::<f64>();
        let value = -0.5 * self.n as f64 * sigma2.ln() - 0.5 * log_det;
        value.is_finite().then_some(Factorization {
            corr,
            lower,
            alpha,
            sigma2,
            value,
        })
    }

    pub fn value(&self, log_lengths: &[f64], nugget: f64) -> Option<f64> {
        self.factor(log_lengths, nugget).map(|f| f.value)
    }

    fn gradient(&self, f: &Factorization, log_lengths: &[f64]) -> Vec<f64> {
        let n = self.n;
        let cols = inverse_factor_columns(&f.lower, n);
        let inv_l2: Vec<f64> = log_lengths.iter().map(|&r| (-2.0 * r).exp()).collect();
        let mut grad = vec![0.0; self.d];
        let mut pair = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                // (R^-1)_ij is the dot product of columns i and j of L^-1
                let inv_r: f64 = cols[i][j - i..].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let w = f.alpha[i] * f.alpha[j] / f.sigma2 - inv_r;
                let c = w * f.corr[row_start(j) + i];
                let row = &self.sq_diff[pair * self.d..(pair + 1) * self.d];
                for k in 0..self.d {
                    grad[k] += c * row[k];
                }
                pair += 1;
            }
        }
        // the pair sum covers half of the symmetric double sum, which the
        // leading 1/2 cancels
        grad.iter_mut().zip(&inv_l2).for_each(|(g, s)| *g *= s);
        grad
    }

    /// Log likelihood and its gradient with respect to log length scales.
    pub fn value_and_gradient(&self, log_lengths: &[f64], nugget: f64) -> Option<(f64, Vec<f64>)> {
        let f = self.factor(log_lengths, nugget)?;
        let g = self.gradient(&f, log_lengths);
        Some((f.value, g))
    }
}

/// Projected gradient ascent with Barzilai–Borwein steps and backtracking.
fn maximize(
    surface: &LikelihoodSurface,
    start: Vec<f64>,
    lower: f64,
    upper: f64,
    nugget: f64,
    max_iterations: usize,
) -> Option<(Vec<f64>, f64)> {
    let project = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = x.clamp(lower, upper));
    let mut x = start;
    project(&mut x);
    let (mut fx, mut gx) = surface.value_and_gradient(&x, nugget)?;
    let mut step = 0.5 / gx.iter().map(|g| g.abs()).fold(1.0, f64::max);
    for _ in 0..max_iterations {
        let mut accepted = None;
        for _ in 0..25 {
            let mut trial: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a + step * g).collect();
            project(&mut trial);
            let moved: f64 = trial.iter().zip(&x).zip(&gx).map(|((t, a), g)| (t - a) * g).sum();
            if moved <= 0.0 {
                break;
            }
            if let Some(ft) = surface.value(&trial, nugget) {
                if ft >= fx + 1e-4 * moved {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((trial, ft)) = accepted else { break };
        let Some((_, gt)) = surface.value_and_gradient(&trial, nugget) else { break };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gt.iter().zip(&gx).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        let improvement = ft - fx;
        x = trial;
        fx = ft;
        gx = gt;
        if improvement.abs() <= 1e-9 * (1.0 + fx.abs()) {
            break;
        }
        step = if sy < 0.0 { (ss / -sy).clamp(1e-6, 1e3) } else { (step * 2.0).min(1e3) };
    }
    Some((x, fx))
}

/// A fitted Gaussian-process surrogate for one objective.
#[derive(Debug, Clone)]
pub struct GpModel {
    training: GpTrainingSet,
    length_scales: Vec<f64>,
    signal_variance: f64,
    nugget: f64,
    y_mean: f64,
    y_scale: f64,
    constant: bool,
    /// Cholesky factor, lower triangle packed row by row.
    lower: Vec<f64>,
    alpha: Vec<f64>,
    log_likelihood: f64,
}

#[derive(Serialize)]
struct GpDump<'a> {
    length_scales: &'a [f64],
    signal_variance: f64,
    nugget: f64,
    target_mean: f64,
    target_scale: f64,
    log_likelihood: f64,
    training: &'a GpTrainingSet,
}

fn standardize(targets: &[f64]) -> (f64, f64, Vec<f64>, bool) {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let scale = var.sqrt();
    if !(scale > 1e-12 * mean.abs().max(1.0)) {
        return (mean, 1.0, vec![0.0; targets.len()], true);
    }
    let y = targets.iter().map(|t| (t - mean) / scale).collect();
    (mean, scale, y, false)
}

fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factorization of a packed lower triangle, in place. Returns
/// false if the matrix is not numerically positive definite.
fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for i in 0..n {
        let ri = row_start(i);
        for j in 0..=i {
            let rj = row_start(j);
            let s = a[ri + j] - dot(&a[ri..ri + j], &a[rj..rj + j]);
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                a[ri + i] = s.sqrt();
            } else {
                a[ri + j] = s / a[rj + j];
            }
        }
    }
    true
}

/// Solves `L v = b` with a packed lower factor.
fn forward_substitute(lower: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for i in 0..n {
        let row = &lower[row_start(i)..row_start(i) + i + 1];
        v[i] = (b[i] - dot(&row[..i], &v[..i])) / row[i];
    }
    v
}

/// Solves `L L^T x = b`.
fn cholesky_solve(lower: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = forward_substitute(lower, n, b);
    for i in (0..n).rev() {
        let row = &lower[row_start(i)..row_start(i) + i + 1];
        x[i] /= row[i];
        let xi = x[i];
        for (xk, l) in x[..i].iter_mut().zip(&row[..i]) {
            *xk -= l * xi;
        }
    }
    x
}

/// Columns of the inverse of a packed lower-triangular factor; column `j`
/// holds rows `j..n`.
fn inverse_factor_columns(lower: &[f64], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| {
            let mut col = vec![0.0; n - j];
            for i in j..n {
                let row = &lower[row_start(i)..row_start(i) + i + 1];
                let rhs = if i == j { 1.0 } else { 0.0 };
                col[i - j] = (rhs - dot(&row[j..i], &col[..i - j])) / row[i];
            }
            col
        })
        .collect()
}

impl GpModel {
    /// Fits length scales by maximum concentrated likelihood.
    pub fn fit(data: &GpTrainingSet, config: &GpConfig) -> Result<Self> {
        Self::fit_from(data, config, None)
    }

    /// As [`GpModel::fit`], with the first restart at `warm_start`.
    pub fn fit_from(data: &GpTrainingSet, config: &GpConfig, warm_start: Option<&[f64]>) -> Result<Self> {
        let data = data.deduplicated();
        if data.len() < 2 {
            return Err(Error::Fit(format!(
                "need at least two distinct inputs, got {}",
                data.len()
            )));
        }
        if data.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Fit("non-finite target".into()));
        }
        let d = data.inputs[0].len();
        let (y_mean, y_scale, y, constant) = standardize(&data.targets);
        if constant {
            return Self::assemble(data, vec![1.0; d], config.nugget, y_mean, y_scale, &y, true);
        }
        let surface = LikelihoodSurface::new(&data.inputs, &y);
        let lower = config.min_length_scale.ln();
        let upper = config.max_length_scale.ln();

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (data.len() as u64).wrapping_mul(0x9e37_79b9));
        let mut starts: Vec<Vec<f64>> = Vec::with_capacity(config.restarts.max(1));
        match warm_start {
            Some(ls) if ls.len() == d => starts.push(ls.iter().map(|l| l.ln()).collect()),
            _ => starts.push(vec![(0.5f64).ln(); d]),
        }
        while starts.len() < config.restarts.max(1) {
            starts.push((0..d).map(|_| rng.gen_range((0.05f64).ln()..(5.0f64).ln())).collect());
        }

        let mut nugget = config.nugget;
        loop {
            let best = starts
                .iter()
                .filter_map(|s| maximize(&surface, s.clone(), lower, upper, nugget, config.max_iterations))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((log_lengths, _)) = best {
                let lengths = log_lengths.iter().map(|r| r.exp()).collect();
                return Self::assemble(data, lengths, nugget, y_mean, y_scale, &y, false);
            }
            nugget *= 10.0;
            if nugget > config.max_nugget * (1.0 + 1e-9) {
                return Err(Error::Fit(format!(
                    "covariance not positive definite for any start with nugget up to {:e}",
                    config.max_nugget
                )));
            }
        }
    }

    /// Builds a model with the given length scales and nugget, profiling
    /// only the process variance.
    pub fn with_hyperparameters(data: &GpTrainingSet, length_scales: &[f64], nugget: f64) -> Result<Self> {
        let data = data.deduplicated();
        if data.len() < 2 {
            return Err(Error::Fit("need at least two distinct inputs".into()));
        }
        if length_scales.len() != data.inputs[0].len() {
            return Err(Error::Dimension {
                expected: data.inputs[0].len(),
                got: length_scales.len(),
            });
        }
        let (y_mean, y_scale, y, constant) = standardize(&data.targets);
        Self::assemble(data, length_scales.to_vec(), nugget, y_mean, y_scale, &y, constant)
    }

    fn assemble(
        training: GpTrainingSet,
        length_scales: Vec<f64>,
        nugget: f64,
        y_mean: f64,
        y_scale: f64,
        y: &[f64],
        constant: bool,
    ) -> Result<Self> {
        let n = training.len();
        let surface = LikelihoodSurface::new(&training.inputs, y);
        let log_lengths: Vec<f64> = length_scales.iter().map(|l| l.ln()).collect();
        let mut lower = surface.correlation(&log_lengths, nugget);
        if !cholesky_in_place(&mut lower, n) {
            return Err(Error::Fit(format!("covariance not positive definite at nugget {nugget:e}")));
        }
        let alpha = cholesky_solve(&lower, n, y);
        let signal_variance = if constant { 0.0 } else { dot(y, &alpha) / n as f64 };
        if !signal_variance.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::Fit("non-finite weights".into()));
        }
        let log_likelihood = surface.value(&log_lengths, nugget).unwrap_or(f64::NEG_INFINITY);
        Ok(Self {
            training,
            length_scales,
            signal_variance,
            nugget,
            y_mean,
            y_scale,
            constant,
            lower,
            alpha,
            log_likelihood,
        })
    }

    fn kernel_vector(&self, x: &[f64]) -> Vec<f64> {
        let inv: Vec<f64> = self.length_scales.iter().map(|l| 0.5 / (l * l)).collect();
        self.training
            .inputs
            .iter()
            .map(|u| {
                let q: f64 = u
                    .iter()
                    .zip(x)
                    .zip(&inv)
                    .map(|((a, b), c)| (a - b) * (a - b) * c)
                    .sum();
                (-q).exp()
            })
            .collect()
    }

    /// Predictive mean and standard deviation at unit-cube input `x`.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        if self.constant {
            return Prediction {
                mean: self.y_mean,
                std: 0.0,
            };
        }
        let r = self.kernel_vector(x);
        let mean = self.y_mean + self.y_scale * dot(&r, &self.alpha);
        let v = forward_substitute(&self.lower, r.len(), &r);
        let reduction: f64 = v.iter().map(|x| x * x).sum();
        let var = self.signal_variance * (1.0 - reduction).max(0.0);
        Prediction {
            mean,
            std: var.sqrt() * self.y_scale,
        }
    }

    pub fn length_scales(&self) -> &[f64] {
        &self.length_scales
    }

    /// Process variance in the original target scale.
    pub fn signal_variance(&self) -> f64 {
        self.signal_variance * self.y_scale * self.y_scale
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Deduplicated training data the model was fitted on.
    pub fn training(&self) -> &GpTrainingSet {
        &self.training
    }

    pub fn training_size(&self) -> usize {
        self.training.len()
    }

    /// Hash of hyperparameters and training data.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in self
            .length_scales
            .iter()
            .chain([self.signal_variance, self.nugget, self.y_mean, self.y_scale].iter())
            .chain(self.training.targets.iter())
        {
            v.to_bits().hash(&mut h);
        }
        for x in &self.training.inputs {
            for v in x {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    /// Hyperparameters and training set as JSON, for debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GpDump {
            length_scales: &self.length_scales,
            signal_variance: self.signal_variance(),
            nugget: self.nugget,
            target_mean: self.y_mean,
            target_scale: self.y_scale,
            log_likelihood: self.log_likelihood,
            training: &self.training,
        })
        .expect("model dump is always serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(n: usize, f: impl Fn(f64) -> f64) -> GpTrainingSet {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        GpTrainingSet::new(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|&x| f(x)).collect()).unwrap()
    }

    #[test]
    fn constant_targets_give_constant_mean_and_zero_variance() {
        let data = grid_1d(5, |_| 3.5);
        let gp = GpModel::fit(&data, &GpConfig::default()).unwrap();
        for x in [0.0, 0.3, 0.77, 1.0] {
            let p = gp.predict(&[x]);
            assert_eq!(p.mean, 3.5);
            assert_eq!(p.std, 0.0);
        }
    }

    #[test]
    fn conflicting_duplicates_are_absorbed() {
        let data = GpTrainingSet::new(
            vec![vec![0.2], vec![0.2], vec![0.9], vec![0.5]],
            vec![1.0, 3.0, 0.0, 1.0],
        )
        .unwrap();
        let gp = GpModel::fit(&data, &GpConfig::default()).unwrap();
        assert_eq!(gp.training_size(), 3);
        let p = gp.predict(&[0.2]);
        assert!(p.mean.is_finite() && p.std.is_finite());
        assert!((p.mean - 2.0).abs() < 1e-4);
    }

    #[test]
    fn single_distinct_point_is_a_fit_error() {
        let data = GpTrainingSet::new(vec![vec![0.1, 0.1]; 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(GpModel::fit(&data, &GpConfig::default()), Err(Error::Fit(_))));
    }

    #[test]
    fn std_reverts_to_prior_far_from_data() {
        let data = grid_1d(6, |x| (3.0 * x).sin());
        let gp = GpModel::fit(&data, &GpConfig::default()).unwrap();
        let far = 1.0 + 50.0 * gp.length_scales()[0];
        let p = gp.predict(&[far]);
        let prior = gp.signal_variance().sqrt();
        assert!((p.std - prior).abs() <= 0.05 * prior, "{} vs {}", p.std, prior);
    }

    #[test]
    fn json_dump_has_hyperparameters() {
        let gp = GpModel::fit(&grid_1d(4, |x| x * x), &GpConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&gp.to_json()).unwrap();
        assert!(v["length_scales"].is_array());
        assert_eq!(v["training"]["targets"].as_array().unwrap().len(), 4);
    }
}
