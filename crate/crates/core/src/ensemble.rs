//! Per-objective surrogate bank and training-data management.
//!
//! Expensive objectives get one GP refitted every iteration. Cheap
//! objectives get a two-member ensemble: a GP refitted on the selected full
//! data plus the cheap-only samples, and a GP fitted once on the cheap
//! samples gathered at initialization.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{GpConfig, GpModel, GpTrainingSet, Prediction};
use crate::pareto::{crowding_distance, nondominated_indices};
use crate::problem::ObjectivePartition;

/// Training-set cap `11d - 1 + 25`.
pub fn training_cap(d: usize) -> usize {
    11 * d - 1 + 25
}

/// Uncertainty-weighted combination of the updated and frozen member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsemblePrediction {
    pub mean: f64,
    pub std: f64,
    /// Weight of the updated member.
    pub alpha: f64,
    /// Weight of the frozen member.
    pub beta: f64,
}

/// Each member is weighted by the other member's standard deviation, so the
/// more certain one dominates. Reported std is the smaller of the two.
pub fn combine(updated: Prediction, frozen: Prediction) -> EnsemblePrediction {
    let total = updated.std + frozen.std;
    let (alpha, beta) = if total > 0.0 {
        (frozen.std / total, updated.std / total)
    } else {
        (0.5, 0.5)
    };
    EnsemblePrediction {
        mean: alpha * updated.mean + beta * frozen.mean,
        std: updated.std.min(frozen.std),
        alpha,
        beta,
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Lloyd's k-means with k-means++ seeding. Returns centroids and the
/// cluster of every point.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iterations: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = points.len();
    let k = k.min(n);
    if k == 0 {
        return (Vec::new(), vec![0; n]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centroids.last().unwrap()));
        }
    }
    let mut assignment = vec![0; n];
    for iteration in 0..max_iterations.max(1) {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centroids[a]).total_cmp(&sq_dist(p, &centroids[b])))
                .unwrap();
            if best != assignment[i] || iteration == 0 {
                changed |= best != assignment[i];
                assignment[i] = best;
            }
        }
        if iteration > 0 && !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            sums[c].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    (centroids, assignment)
}

/// Exactly `min(k, n)` distinct indices: for every cluster the member
/// nearest its centroid, topped up (if clusters collapse) with the points
/// closest to any centroid.
pub fn cluster_representatives(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let k = k.min(points.len());
    if k == 0 {
        return Vec::new();
    }
    if k == points.len() {
        return (0..k).collect();
    }
    let (centroids, assignment) = kmeans(points, k, seed, 50);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; points.len()];
    for (c, centroid) in centroids.iter().enumerate() {
        let rep = (0..points.len())
            .filter(|&i| assignment[i] == c)
            .min_by(|&a, &b| sq_dist(&points[a], centroid).total_cmp(&sq_dist(&points[b], centroid)));
        if let Some(i) = rep {
            if !taken[i] {
                taken[i] = true;
                chosen.push(i);
            }
        }
    }
    if chosen.len() < k {
        let mut rest: Vec<(usize, f64)> = (0..points.len())
            .filter(|&i| !taken[i])
            .map(|i| (i, sq_dist(&points[i], &centroids[assignment[i]])))
            .collect();
        rest.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        chosen.extend(rest.into_iter().take(k - chosen.len()).map(|(i, _)| i));
    }
    chosen.sort_unstable();
    chosen
}

/// Indices of at most `cap` points used to train the models.
///
/// Keeps the `newest` points, then the non-dominated set (truncated by
/// crowding distance if it does not fit), then fills the remainder with
/// k-means cluster representatives in decision space.
pub fn select_training_subset(
    inputs: &[Vec<f64>],
    objectives: &[Vec<f64>],
    newest: &[usize],
    cap: usize,
    seed: u64,
) -> Vec<usize> {
    let n = inputs.len();
    if n <= cap {
        return (0..n).collect();
    }
    let mut taken = vec![false; n];
    let mut chosen: Vec<usize> = Vec::with_capacity(cap);
    for &i in newest.iter().take(cap) {
        if !taken[i] {
            taken[i] = true;
            chosen.push(i);
        }
    }

    let nd: Vec<usize> = nondominated_indices(objectives)
        .into_iter()
        .filter(|&i| !taken[i])
        .collect();
    let room = cap - chosen.len();
    let nd = if nd.len() > room {
        let front: Vec<&[f64]> = nd.iter().map(|&i| objectives[i].as_slice()).collect();
        let crowd = crowding_distance(&front);
        let mut order: Vec<usize> = (0..nd.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(nd[a].cmp(&nd[b])));
        order.into_iter().take(room).map(|o| nd[o]).collect()
    } else {
        nd
    };
    for i in nd {
        taken[i] = true;
        chosen.push(i);
    }

    let room = cap - chosen.len();
    if room > 0 {
        let rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        let pts: Vec<Vec<f64>> = rest.iter().map(|&i| inputs[i].clone()).collect();
        chosen.extend(cluster_representatives(&pts, room, seed).into_iter().map(|r| rest[r]));
    }
    chosen.sort_unstable();
    chosen
}

/// A uniformly random subset of `min(cap, n)` indices.
pub fn random_subset(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if n <= cap {
        return idx;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx.truncate(cap);
    idx.sort_unstable();
    idx
}

/// Settings for refitting models every iteration: fewer restarts, one of
/// them at the previous length scales.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BankConfig {
    pub initial: GpConfig,
    pub refit: GpConfig,
}

impl Default for BankConfig {
    fn default() -> Self {
        let initial = GpConfig::default();
        let refit = GpConfig {
            restarts: 2,
            max_iterations: 30,
            ..initial.clone()
        };
        Self { initial, refit }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateBank {
    /// One model per objective: the expensive GP or the cheap updated GP.
    models: Vec<GpModel>,
    /// Frozen members, present for cheap objectives only.
    frozen: Vec<Option<GpModel>>,
    config: BankConfig,
}

fn fit_with_fallback(data: &GpTrainingSet, config: &GpConfig, warm: Option<&[f64]>) -> Result<GpModel> {
    GpModel::fit_from(data, config, warm).or_else(|first| {
        log::warn!("refit failed ({first}); retrying from scratch with jitter-free defaults");
        GpModel::fit(data, &GpConfig { restarts: config.restarts.max(3), ..config.clone() })
    })
}

impl SurrogateBank {
    /// Fits one model per objective on `full` (normalized inputs, complete
    /// objective vectors) and, for each cheap objective, a frozen model on
    /// its initialization samples. `extra` is indexed by cheap slot; an
    /// empty set falls back to the full-data column.
    pub fn initialize(
        full_inputs: &[Vec<f64>],
        full_objectives: &[Vec<f64>],
        extra: &[GpTrainingSet],
        partition: &ObjectivePartition,
        config: BankConfig,
    ) -> Result<Self> {
        let m = full_objectives.first().ok_or(Error::Empty("initial archive"))?.len();
        let mut models = Vec::with_capacity(m);
        for i in 0..m {
            let data = column(full_inputs, full_objectives, i)?;
            models.push(fit_with_fallback(&data, &seeded(&config.initial, i as u64), None)?);
        }
        let mut frozen = vec![None; m];
        for (slot, &j) in partition.cheap.iter().enumerate() {
            let own = column(full_inputs, full_objectives, j)?;
            let data = match extra.get(slot) {
                Some(e) if !e.is_empty() => e.clone(),
                _ => own,
            };
            frozen[j] = Some(fit_with_fallback(&data, &seeded(&config.initial, 100 + j as u64), None)?);
        }
        Ok(Self { models, frozen, config })
    }

    /// A bank without frozen members, one GP per objective.
    pub fn single(data: &[GpTrainingSet], config: BankConfig) -> Result<Self> {
        let models = data
            .iter()
            .enumerate()
            .map(|(i, d)| fit_with_fallback(d, &seeded(&config.initial, i as u64), None))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            frozen: vec![None; models.len()],
            models,
            config,
        })
    }

    /// Refits every non-frozen model; `data[i]` is the training set for
    /// objective `i`. Frozen members are left untouched.
    pub fn refit(&mut self, data: &[GpTrainingSet], iteration: u64) -> Result<()> {
        if data.len() != self.models.len() {
            return Err(Error::Dimension {
                expected: self.models.len(),
                got: data.len(),
            });
        }
        for (i, d) in data.iter().enumerate() {
            let cfg = seeded(&self.config.refit, iteration.wrapping_mul(1009).wrapping_add(i as u64));
            let warm = self.models[i].length_scales().to_vec();
            self.models[i] = fit_with_fallback(d, &cfg, Some(&warm))?;
        }
        Ok(())
    }

    pub fn num_objectives(&self) -> usize {
        self.models.len()
    }

    pub fn model(&self, i: usize) -> &GpModel {
        &self.models[i]
    }

    pub fn frozen(&self, i: usize) -> Option<&GpModel> {
        self.frozen[i].as_ref()
    }

    /// Fingerprints of the frozen members, `None` for objectives without one.
    pub fn frozen_fingerprints(&self) -> Vec<Option<u64>> {
        self.frozen.iter().map(|f| f.as_ref().map(GpModel::fingerprint)).collect()
    }

    /// Number of fitted models, frozen ones included.
    pub fn model_count(&self) -> usize {
        self.models.len() + self.frozen.iter().flatten().count()
    }

    pub fn predict_objective(&self, i: usize, x: &[f64]) -> Prediction {
        let p = self.models[i].predict(x);
        match &self.frozen[i] {
            Some(f) => {
                let e = combine(p, f.predict(x));
                Prediction { mean: e.mean, std: e.std }
            }
            None => p,
        }
    }

    /// Ensemble output for a cheap objective; `None` for objectives without
    /// a frozen member.
    pub fn ensemble_predict(&self, i: usize, x: &[f64]) -> Option<EnsemblePrediction> {
        let f = self.frozen[i].as_ref()?;
        Some(combine(self.models[i].predict(x), f.predict(x)))
    }

    /// Means and standard deviations for all objectives at unit-cube `x`.
    pub fn predict(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (0..self.models.len())
            .map(|i| {
                let p = self.predict_objective(i, x);
                (p.mean, p.std)
            })
            .unzip()
    }
}

fn seeded(config: &GpConfig, salt: u64) -> GpConfig {
    GpConfig {
        seed: config.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ..config.clone()
    }
}

fn column(inputs: &[Vec<f64>], objectives: &[Vec<f64>], i: usize) -> Result<GpTrainingSet> {
    GpTrainingSet::new(inputs.to_vec(), objectives.iter().map(|f| f[i]).collect())
}
