//! The SBP-BO main loop and its ablation variants.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{af_sbp, ratio_weights, AcquisitionContext, AcquisitionScore, PopulationStats};
use crate::engine::{apd_select, apd_winners, latin_hypercube, soea_optimize_cheap, ReferenceVectorSet, SoeaConfig, Variation};
use crate::ensemble::{cluster_representatives, random_subset, select_training_subset, training_cap, BankConfig, SurrogateBank};
use crate::error::{Error, Result};
use crate::gp::{GpModel, GpTrainingSet};
use crate::metrics::igd_plus;
use crate::pareto::nondominated_indices;
use crate::problem::{BudgetLedger, HeterogeneousProblem};

/// Euclidean tolerance (unit cube) under which a candidate counts as
/// already evaluated.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Penalized acquisition with the two-member cheap ensembles.
    #[serde(rename = "SBP_BO")]
    SbpBo,
    /// Same loop with the penalty switched off.
    #[serde(rename = "BO_AAF")]
    BoAaf,
    /// One GP per objective on a random capped subset of all data.
    #[serde(rename = "SBP_BO_R")]
    SbpBoR,
    /// One GP per objective on k-means representatives of all data.
    #[serde(rename = "SBP_BO_C")]
    SbpBoC,
    /// Cheap objectives evaluated for real inside the surrogate search.
    #[serde(rename = "SBP_NoGPc")]
    SbpNoGpc,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::SbpBo,
        Variant::BoAaf,
        Variant::SbpBoR,
        Variant::SbpBoC,
        Variant::SbpNoGpc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SbpBo => "SBP_BO",
            Variant::BoAaf => "BO_AAF",
            Variant::SbpBoR => "SBP_BO_R",
            Variant::SbpBoC => "SBP_BO_C",
            Variant::SbpNoGpc => "SBP_NoGPc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().replace('_', "").to_ascii_uppercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// New fully evaluated samples per iteration.
    pub u: usize,
    /// Surrogate-search generations per iteration.
    pub w_max: usize,
    pub fe_max_expensive: usize,
    pub variant: Variant,
    pub seed: u64,
    /// Initial design size; `None` means `11d - 1`.
    pub initial_size: Option<usize>,
    /// Training cap; `None` means `11d - 1 + 25`.
    pub training_cap: Option<usize>,
    /// Surrogate-search population; `None` means the reference-vector count.
    pub population: Option<usize>,
    pub variation: Variation,
    pub soea: SoeaConfig,
    pub gp: BankConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            u: 3,
            w_max: 20,
            fe_max_expensive: 300,
            variant: Variant::SbpBo,
            seed: 0,
            initial_size: None,
            training_cap: None,
            population: None,
            variation: Variation::default(),
            soea: SoeaConfig::default(),
            gp: BankConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn initial_size_for(&self, d: usize) -> usize {
        self.initial_size.unwrap_or(11 * d - 1)
    }

    pub fn training_cap_for(&self, d: usize) -> usize {
        self.training_cap.unwrap_or_else(|| training_cap(d))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.u == 0 {
            return Err(Error::Config("u must be at least 1".into()));
        }
        if self.w_max == 0 {
            return Err(Error::Config("w_max must be at least 1".into()));
        }
        let n = self.initial_size_for(d);
        if n < 2 {
            return Err(Error::Config("initial design needs at least two points".into()));
        }
        if self.fe_max_expensive < n {
            return Err(Error::Config(format!(
                "fe_max_expensive = {} is smaller than the initial design ({n})",
                self.fe_max_expensive
            )));
        }
        Ok(())
    }
}

/// SplitMix64 step, used to derive independent seeds from one master seed.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Everything evaluated during a run. Inputs are stored in the problem's own
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationArchive {
    /// Fully evaluated points: the set D.
    pub full: Vec<(Vec<f64>, Vec<f64>)>,
    /// Iteration at which each full point was added (0 for the initial design).
    pub full_iteration: Vec<usize>,
    /// Objective index of each cheap slot.
    pub cheap_indices: Vec<usize>,
    /// Cheap-only samples gathered at initialization, per cheap slot.
    pub initial_cheap: Vec<Vec<(Vec<f64>, f64)>>,
    /// Cheap-only samples gathered during the loop, per cheap slot, oldest
    /// first.
    pub extra_cheap: Vec<VecDeque<(Vec<f64>, f64)>>,
    pub extra_cap: usize,
    nondominated: Vec<usize>,
}

impl EvaluationArchive {
    pub fn new(cheap_indices: Vec<usize>, extra_cap: usize) -> Self {
        let p = cheap_indices.len();
        Self {
            full: Vec::new(),
            full_iteration: Vec::new(),
            cheap_indices,
            initial_cheap: vec![Vec::new(); p],
            extra_cheap: vec![VecDeque::new(); p],
            extra_cap,
            nondominated: Vec::new(),
        }
    }

    pub fn insert_full(&mut self, batch: Vec<(Vec<f64>, Vec<f64>)>, iteration: usize) {
        for record in batch {
            self.full.push(record);
            self.full_iteration.push(iteration);
        }
        let objectives: Vec<&[f64]> = self.full.iter().map(|(_, f)| f.as_slice()).collect();
        self.nondominated = nondominated_indices(&objectives);
    }

    /// Appends cheap-only samples, evicting the oldest beyond the cap.
    pub fn insert_extra(&mut self, slot: usize, batch: Vec<(Vec<f64>, f64)>) {
        let pool = &mut self.extra_cheap[slot];
        pool.extend(batch);
        while pool.len() > self.extra_cap {
            pool.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.full.len()
    }

    pub fn is_empty(&self) -> bool {
        self.full.is_empty()
    }

    /// Indices into `full` of the current non-dominated set.
    pub fn nondominated(&self) -> &[usize] {
        &self.nondominated
    }

    pub fn nondominated_objectives(&self) -> Vec<Vec<f64>> {
        self.nondominated.iter().map(|&i| self.full[i].1.clone()).collect()
    }

    pub fn newest(&self, iteration: usize) -> Vec<usize> {
        (0..self.full.len()).filter(|&i| self.full_iteration[i] == iteration).collect()
    }
}

/// Per-iteration trace entry. `itrn = 0` describes the state right after
/// initialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub itrn: usize,
    pub fe_expensive: usize,
    /// Aligned with the problem's cheap objectives.
    pub fe_cheap: Vec<usize>,
    pub igd_plus: Option<f64>,
    /// Smallest and largest penalty factor applied in this iteration.
    pub penalty_min: f64,
    pub penalty_max: f64,
    pub nondominated: usize,
    /// Training-set size of every updated (non-frozen) model.
    pub training_sizes: Vec<usize>,
    pub frozen_fingerprints: Vec<Option<u64>>,
    pub wall_time: f64,
    pub archive_snapshot: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub archive: EvaluationArchive,
    pub trace: Vec<RunRecord>,
    pub ledger: BudgetLedger,
}

impl RunOutcome {
    pub fn nondominated_objectives(&self) -> Vec<Vec<f64>> {
        self.archive.nondominated_objectives()
    }

    pub fn iterations(&self) -> usize {
        self.trace.last().map_or(0, |r| r.itrn)
    }
}

/// A member of the surrogate search with predictions for every objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Unit-cube coordinates.
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSearchConfig {
    pub w_max: usize,
    pub population: usize,
    pub variation: Variation,
}

/// `w_max` generations of reference-vector guided search on predicted
/// objectives, in the unit cube.
///
/// `initial` seeds the population (APD-reduced to the population size, or
/// padded with uniform points). Reference vectors are adapted every
/// `ceil(w_max / 2)` generations.
pub fn inner_surrogate_search<P, R>(
    mut predict: P,
    initial: &[Vec<f64>],
    refs: &mut ReferenceVectorSet,
    config: &InnerSearchConfig,
    rng: &mut R,
) -> Result<Vec<Candidate>>
where
    P: FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
    R: Rng,
{
    let d = initial.first().ok_or(Error::Empty("search seed"))?.len();
    let n = config.population.max(2);
    let unit = vec![(0.0, 1.0); d];
    let mut evaluate = |x: Vec<f64>| -> Result<Candidate> {
        let (mean, std) = predict(&x)?;
        Ok(Candidate { x, mean, std })
    };

    let mut pop: Vec<Candidate> = initial.iter().cloned().map(&mut evaluate).collect::<Result<_>>()?;
    if pop.len() > n {
        let means: Vec<Vec<f64>> = pop.iter().map(|c| c.mean.clone()).collect();
        let keep = apd_select(&means, refs, 0.0, n)?;
        pop = keep.into_iter().map(|i| pop[i].clone()).collect();
    }
    while pop.len() < n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        pop.push(evaluate(x)?);
    }

    let period = config.w_max.div_ceil(2).max(1);
    for generation in 1..=config.w_max {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.shuffle(rng);
        let mut offspring = Vec::with_capacity(pop.len());
        for pair in order.chunks(2) {
            let a = &pop[pair[0]].x;
            let b = &pop[*pair.get(1).unwrap_or(&order[0])].x;
            let (c1, c2) = config.variation.offspring(a, b, &unit, rng);
            offspring.push(evaluate(c1)?);
            if offspring.len() < pop.len() {
                offspring.push(evaluate(c2)?);
            }
        }
        pop.extend(offspring);
        let means: Vec<Vec<f64>> = pop.iter().map(|c| c.mean.clone()).collect();
        let progress = generation as f64 / config.w_max as f64;
        let keep = apd_select(&means, refs, progress, n)?;
        pop = keep.into_iter().map(|i| pop[i].clone()).collect();
        if generation % period == 0 && generation < config.w_max {
            let m = pop[0].mean.len();
            let mut lo = vec![f64::INFINITY; m];
            let mut hi = vec![f64::NEG_INFINITY; m];
            for c in &pop {
                for k in 0..m {
                    lo[k] = lo[k].min(c.mean[k]);
                    hi[k] = hi[k].max(c.mean[k]);
                }
            }
            refs.adapt(&lo, &hi);
        }
    }
    Ok(pop)
}

fn is_duplicate(x: &[f64], others: &[Vec<f64>]) -> bool {
    others.iter().any(|o| {
        o.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < DUPLICATE_TOLERANCE
    })
}

/// Points chosen for evaluation in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewSamples {
    /// Unit-cube points for full evaluation.
    pub full: Vec<Vec<f64>>,
    /// Unit-cube points for cheap-only evaluation, per cheap slot.
    pub cheap: Vec<Vec<Vec<f64>>>,
}

/// Picks `u` points for full evaluation and `cheap_counts[s]` points per
/// cheap slot from the scored population.
///
/// The promising subset is the set of APD winners over the acquisition
/// scores. Full-evaluation points are drawn at random from it, skipping
/// anything already in `archive` (unit cube); cheap-only points are drawn
/// from the remaining winners, with replacement only if they run out.
pub fn select_new_samples<R: Rng>(
    population: &[Candidate],
    scores: &[AcquisitionScore],
    refs: &ReferenceVectorSet,
    progress: f64,
    u: usize,
    cheap_counts: &[usize],
    archive: &[Vec<f64>],
    rng: &mut R,
) -> Result<NewSamples> {
    let values: Vec<Vec<f64>> = scores.iter().map(|s| s.values.clone()).collect();
    let mut winners = apd_winners(&values, refs, progress)?;
    winners.shuffle(rng);

    let mut full: Vec<Vec<f64>> = Vec::with_capacity(u);
    let mut used = vec![false; population.len()];
    let pick = |pool: &[usize], full: &mut Vec<Vec<f64>>, used: &mut Vec<bool>| {
        for &i in pool {
            if full.len() >= u {
                break;
            }
            let x = &population[i].x;
            if used[i] || is_duplicate(x, archive) || is_duplicate(x, full) {
                continue;
            }
            used[i] = true;
            full.push(x.clone());
        }
    };
    pick(&winners, &mut full, &mut used);
    if full.len() < u {
        log::warn!("promising subset yields {} new points, {u} needed; drawing from the rest of the population", full.len());
        let mut rest: Vec<usize> = (0..population.len()).filter(|i| !used[*i]).collect();
        rest.shuffle(rng);
        pick(&rest, &mut full, &mut used);
    }
    let d = population.first().map_or(0, |c| c.x.len());
    while full.len() < u {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        if !is_duplicate(&x, archive) {
            full.push(x);
        }
    }

    let remaining: Vec<usize> = winners.iter().copied().filter(|&i| !used[i]).collect();
    let cheap = cheap_counts
        .iter()
        .map(|&count| {
            let mut pool = remaining.clone();
            pool.shuffle(rng);
            let mut chosen: Vec<Vec<f64>> = pool.iter().take(count).map(|&i| population[i].x.clone()).collect();
            if chosen.len() < count {
                log::warn!(
                    "promising subset holds {} unused points, {count} cheap samples needed; sampling with replacement",
                    pool.len()
                );
                let source: Vec<usize> = if winners.is_empty() { (0..population.len()).collect() } else { winners.clone() };
                while chosen.len() < count {
                    let i = source[rng.gen_range(0..source.len())];
                    chosen.push(population[i].x.clone());
                }
            }
            chosen
        })
        .collect();
    Ok(NewSamples { full, cheap })
}

enum Surrogates {
    Bank(SurrogateBank),
    /// Models for expensive objectives only; cheap objectives are evaluated.
    ExpensiveOnly(Vec<Option<GpModel>>),
}

impl Surrogates {
    fn training_sizes(&self) -> Vec<usize> {
        match self {
            Surrogates::Bank(b) => (0..b.num_objectives()).map(|i| b.model(i).training_size()).collect(),
            Surrogates::ExpensiveOnly(models) => models.iter().flatten().map(GpModel::training_size).collect(),
        }
    }

    fn frozen_fingerprints(&self) -> Vec<Option<u64>> {
        match self {
            Surrogates::Bank(b) => b.frozen_fingerprints(),
            Surrogates::ExpensiveOnly(models) => vec![None; models.len()],
        }
    }
}

struct Run<'a> {
    problem: &'a HeterogeneousProblem,
    config: &'a OptimizerConfig,
    reference: Option<&'a [Vec<f64>]>,
    ledger: BudgetLedger,
    archive: EvaluationArchive,
    cap: usize,
    started: Instant,
}

impl Run<'_> {
    fn unit(&self, x: &[f64]) -> Vec<f64> {
        self.problem.normalize(x)
    }

    fn full_inputs(&self) -> Vec<Vec<f64>> {
        self.archive.full.iter().map(|(x, _)| self.unit(x)).collect()
    }

    fn full_objectives(&self) -> Vec<Vec<f64>> {
        self.archive.full.iter().map(|(_, f)| f.clone()).collect()
    }

    fn cheap_pool(&self, slot: usize, include_full: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
        let j = self.archive.cheap_indices[slot];
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        if include_full {
            for (x, f) in &self.archive.full {
                inputs.push(self.unit(x));
                targets.push(f[j]);
            }
        }
        for (x, v) in self.archive.initial_cheap[slot].iter().chain(&self.archive.extra_cheap[slot]) {
            inputs.push(self.unit(x));
            targets.push(*v);
        }
        (inputs, targets)
    }

    /// Training data of every objective for the single-GP variants: a capped
    /// subset of all data available for that objective.
    fn capped_data(&self, iteration: usize) -> Result<Vec<GpTrainingSet>> {
        let m = self.problem.num_objectives();
        let partition = self.problem.partition();
        (0..m)
            .map(|i| {
                let (inputs, targets) = match partition.cheap_slot(i) {
                    Some(slot) => self.cheap_pool(slot, true),
                    None => (self.full_inputs(), self.full_objectives().iter().map(|f| f[i]).collect()),
                };
                let seed = substream(self.config.seed, 0x5e1e_c700 + (iteration * m + i) as u64);
                let idx = match self.config.variant {
                    Variant::SbpBoC => cluster_representatives(&inputs, self.cap, seed),
                    _ => random_subset(inputs.len(), self.cap, seed),
                };
                GpTrainingSet::new(
                    idx.iter().map(|&k| inputs[k].clone()).collect(),
                    idx.iter().map(|&k| targets[k]).collect(),
                )
            })
            .collect()
    }

    /// Training data for the banked variants: the subset D^t for every
    /// objective, extended with the accumulated cheap-only samples.
    fn subset_data(&self, iteration: usize) -> Result<Vec<GpTrainingSet>> {
        let inputs = self.full_inputs();
        let objectives = self.full_objectives();
        let newest = self.archive.newest(iteration);
        let seed = substream(self.config.seed, 0xd7_0000 + iteration as u64);
        let subset = select_training_subset(&inputs, &objectives, &newest, self.cap, seed);
        let partition = self.problem.partition();
        (0..self.problem.num_objectives())
            .map(|i| {
                let mut data = GpTrainingSet::new(
                    subset.iter().map(|&k| inputs[k].clone()).collect(),
                    subset.iter().map(|&k| objectives[k][i]).collect(),
                )?;
                if let Some(slot) = partition.cheap_slot(i) {
                    for (x, v) in &self.archive.extra_cheap[slot] {
                        data.push(self.unit(x), *v);
                    }
                }
                Ok(data)
            })
            .collect()
    }

    fn build_surrogates(&self) -> Result<Surrogates> {
        let m = self.problem.num_objectives();
        match self.config.variant {
            Variant::SbpBo | Variant::BoAaf => {
                let extra: Vec<GpTrainingSet> = (0..self.archive.cheap_indices.len())
                    .map(|slot| {
                        let (inputs, targets) = self.cheap_pool(slot, false);
                        GpTrainingSet::new(inputs, targets)
                    })
                    .collect::<Result<_>>()?;
                let data = self.subset_data(0)?;
                let inputs = &data[0].inputs;
                let objectives: Vec<Vec<f64>> = (0..data[0].len()).map(|k| data.iter().map(|d| d.targets[k]).collect()).collect();
                Ok(Surrogates::Bank(SurrogateBank::initialize(
                    inputs,
                    &objectives,
                    &extra,
                    self.problem.partition(),
                    self.config.gp.clone(),
                )?))
            }
            Variant::SbpBoR | Variant::SbpBoC => Ok(Surrogates::Bank(SurrogateBank::single(
                &self.capped_data(0)?,
                self.config.gp.clone(),
            )?)),
            Variant::SbpNoGpc => {
                let data = self.subset_data(0)?;
                let partition = self.problem.partition();
                let models = (0..m)
                    .map(|i| {
                        if partition.is_cheap(i) {
                            Ok(None)
                        } else {
                            GpModel::fit(&data[i], &self.config.gp.initial).map(Some)
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok(Surrogates::ExpensiveOnly(models))
            }
        }
    }

    fn update_surrogates(&self, surrogates: &mut Surrogates, iteration: usize) -> Result<()> {
        match surrogates {
            Surrogates::Bank(bank) => {
                let data = match self.config.variant {
                    Variant::SbpBoR | Variant::SbpBoC => self.capped_data(iteration)?,
                    _ => self.subset_data(iteration)?,
                };
                bank.refit(&data, iteration as u64)
            }
            Surrogates::ExpensiveOnly(models) => {
                let data = self.subset_data(iteration)?;
                for (i, slot) in models.iter_mut().enumerate() {
                    if let Some(model) = slot {
                        let cfg = crate::gp::GpConfig {
                            seed: substream(self.config.gp.refit.seed, (iteration * 1009 + i) as u64),
                            ..self.config.gp.refit.clone()
                        };
                        let warm = model.length_scales().to_vec();
                        *model = GpModel::fit_from(&data[i], &cfg, Some(&warm))
                            .or_else(|_| GpModel::fit(&data[i], &self.config.gp.initial))?;
                    }
                }
                Ok(())
            }
        }
    }

    fn record(&self, itrn: usize, surrogates: &Surrogates, penalty: (f64, f64)) -> Result<RunRecord> {
        let igd = match self.reference {
            Some(z) => Some(igd_plus(&self.archive.nondominated_objectives(), z)?),
            None => None,
        };
        Ok(RunRecord {
            itrn,
            fe_expensive: self.ledger.fe_expensive,
            fe_cheap: self.ledger.fe_cheap.clone(),
            igd_plus: igd,
            penalty_min: penalty.0,
            penalty_max: penalty.1,
            nondominated: self.archive.nondominated().len(),
            training_sizes: surrogates.training_sizes(),
            frozen_fingerprints: surrogates.frozen_fingerprints(),
            wall_time: self.started.elapsed().as_secs_f64(),
            archive_snapshot: None,
        })
    }
}

/// Runs the optimizer until the expensive budget is spent.
///
/// The loop continues while `fe_expensive < fe_max_expensive`; the last
/// iteration shrinks its full-evaluation batch so the cap is never exceeded,
/// while still charging `u * r_j` evaluations to every cheap objective.
/// When `reference` is given, each trace record carries the IGD+ of the
/// archive's non-dominated set.
pub fn run(problem: &HeterogeneousProblem, config: &OptimizerConfig, reference: Option<&[Vec<f64>]>) -> Result<RunOutcome> {
    let d = problem.dimension();
    let m = problem.num_objectives();
    config.validate(d)?;
    let n = config.initial_size_for(d);
    let cap = config.training_cap_for(d);
    let partition = problem.partition().clone();
    let mut state = Run {
        problem,
        config,
        reference,
        ledger: problem.new_ledger(config.fe_max_expensive),
        archive: EvaluationArchive::new(partition.cheap.clone(), cap),
        cap,
        started: Instant::now(),
    };

    let unit_bounds = vec![(0.0, 1.0); d];
    let mut design = Vec::with_capacity(n);
    for u in latin_hypercube(n, &unit_bounds, substream(config.seed, 1)) {
        let x = problem.denormalize(&u);
        let f = problem.evaluate_full(&x, &mut state.ledger)?;
        design.push((x, f.into_values().expect("full evaluation is complete")));
    }
    state.archive.insert_full(design, 0);

    if config.variant != Variant::SbpNoGpc {
        for (slot, &j) in partition.cheap.iter().enumerate() {
            let budget = n * problem.ratios()[j] as usize - n;
            let seeds: Vec<(Vec<f64>, f64)> = state.archive.full.iter().map(|(x, f)| (x.clone(), f[j])).collect();
            let outcome = soea_optimize_cheap(
                problem,
                j,
                budget,
                &seeds,
                &mut state.ledger,
                &config.soea,
                substream(config.seed, 0x50ea + j as u64),
            )?;
            state.archive.initial_cheap[slot] = outcome.data;
        }
    }

    let mut surrogates = state.build_surrogates()?;
    let mut trace = vec![state.record(0, &surrogates, (1.0, 1.0))?];
    let weights = ratio_weights(problem.ratios());
    let mut rng = ChaCha8Rng::seed_from_u64(substream(config.seed, 2));
    let mut search_refs = ReferenceVectorSet::for_objectives(m);
    let selection_refs = ReferenceVectorSet::for_objectives(m);
    let search = InnerSearchConfig {
        w_max: config.w_max,
        population: config.population.unwrap_or(search_refs.len()),
        variation: config.variation,
    };

    // the surrogate search carries its population over from one iteration
    // to the next; the first one starts from the initial design
    let mut carried = state.full_inputs();
    let mut itrn = 1;
    while !state.ledger.is_exhausted() {
        let u_eff = config.u.min(state.ledger.remaining_expensive());
        let seeds = std::mem::take(&mut carried);
        let population = match &surrogates {
            Surrogates::Bank(bank) => {
                inner_surrogate_search(|x| Ok(bank.predict(x)), &seeds, &mut search_refs, &search, &mut rng)?
            }
            Surrogates::ExpensiveOnly(models) => {
                let ledger = &mut state.ledger;
                inner_surrogate_search(
                    |x| {
                        let mut mean = vec![0.0; m];
                        let mut std = vec![0.0; m];
                        let real = problem.denormalize(x);
                        for i in 0..m {
                            match &models[i] {
                                Some(model) => {
                                    let p = model.predict(x);
                                    mean[i] = p.mean;
                                    std[i] = p.std;
                                }
                                None => mean[i] = problem.evaluate_cheap(&real, i, ledger)?,
                            }
                        }
                        Ok((mean, std))
                    },
                    &seeds,
                    &mut search_refs,
                    &search,
                    &mut rng,
                )?
            }
        };

        let means: Vec<Vec<f64>> = population.iter().map(|c| c.mean.clone()).collect();
        let stds: Vec<Vec<f64>> = population.iter().map(|c| c.std.clone()).collect();
        let ctx = AcquisitionContext {
            fe_current: state.ledger.fe_expensive,
            fe_max: config.fe_max_expensive,
            itrn,
            weights: weights.clone(),
            stats: PopulationStats::from_predictions(&means, &stds)?,
            penalty_disabled: config.variant == Variant::BoAaf,
        };
        let scores: Vec<AcquisitionScore> = population
            .iter()
            .map(|c| af_sbp(&c.mean, &c.std, &ctx))
            .collect::<Result<_>>()?;
        let penalty = scores
            .iter()
            .flat_map(|s| s.penalty.iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));

        let cheap_counts: Vec<usize> = if config.variant == Variant::SbpNoGpc {
            vec![0; partition.cheap.len()]
        } else {
            partition
                .cheap
                .iter()
                .map(|&j| config.u * problem.ratios()[j] as usize - u_eff)
                .collect()
        };
        let progress = state.ledger.fe_expensive as f64 / config.fe_max_expensive as f64;
        let samples = select_new_samples(
            &population,
            &scores,
            &selection_refs,
            progress,
            u_eff,
            &cheap_counts,
            &state.full_inputs(),
            &mut rng,
        )?;
        carried = population.iter().map(|c| c.x.clone()).collect();

        let mut batch = Vec::with_capacity(u_eff);
        for x in &samples.full {
            let real = problem.denormalize(x);
            let f = problem.evaluate_full(&real, &mut state.ledger)?;
            batch.push((real, f.into_values().expect("full evaluation is complete")));
        }
        state.archive.insert_full(batch, itrn);
        for (slot, points) in samples.cheap.iter().enumerate() {
            let j = partition.cheap[slot];
            let mut extra = Vec::with_capacity(points.len());
            for x in points {
                let real = problem.denormalize(x);
                let v = problem.evaluate_cheap(&real, j, &mut state.ledger)?;
                extra.push((real, v));
            }
            state.archive.insert_extra(slot, extra);
        }

        state.update_surrogates(&mut surrogates, itrn)?;
        let record = state.record(itrn, &surrogates, penalty)?;
        log::debug!(
            "iteration {itrn}: FE^e = {}, IGD+ = {:?}",
            record.fe_expensive,
            record.igd_plus
        );
        trace.push(record);
        itrn += 1;
    }

    Ok(RunOutcome {
        archive: state.archive,
        trace,
        ledger: state.ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::simplex_lattice;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("sbp-bo-r".parse::<Variant>().unwrap(), Variant::SbpBoR);
        assert_eq!("SBP-NoGPc".parse::<Variant>().unwrap(), Variant::SbpNoGpc);
        assert!("HK-RVEA".parse::<Variant>().is_err());
    }

    #[test]
    fn archive_caps_extra_samples() {
        let mut a = EvaluationArchive::new(vec![0], 3);
        a.insert_extra(0, (0..5).map(|i| (vec![i as f64], i as f64)).collect());
        let kept: Vec<f64> = a.extra_cheap[0].iter().map(|p| p.1).collect();
        assert_eq!(kept, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn archive_tracks_nondominated_set() {
        let mut a = EvaluationArchive::new(vec![], 10);
        a.insert_full(vec![(vec![0.0], vec![1.0, 1.0]), (vec![1.0], vec![2.0, 2.0])], 0);
        assert_eq!(a.nondominated(), &[0]);
        a.insert_full(vec![(vec![0.5], vec![0.5, 3.0])], 1);
        assert_eq!(a.nondominated(), &[0, 2]);
        assert_eq!(a.newest(1), vec![2]);
    }

    fn candidates(n: usize, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
                Candidate {
                    mean: vec![x[0], 1.0 - x[0] + x[1]],
                    std: vec![0.1, 0.1],
                    x,
                }
            })
            .collect()
    }

    fn plain_scores(pop: &[Candidate]) -> Vec<AcquisitionScore> {
        pop.iter()
            .map(|c| AcquisitionScore {
                values: c.mean.clone(),
                penalty: vec![1.0; 2],
            })
            .collect()
    }

    #[test]
    fn sample_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = candidates(60, &mut rng);
        let refs = ReferenceVectorSet::from_lattice(&simplex_lattice(2, 99));
        let s = select_new_samples(&pop, &plain_scores(&pop), &refs, 0.5, 3, &[12, 0], &[], &mut rng).unwrap();
        assert_eq!(s.full.len(), 3);
        assert_eq!(s.cheap[0].len(), 12);
        assert!(s.cheap[1].is_empty());
    }

    #[test]
    fn archived_points_are_not_reselected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pop = candidates(10, &mut rng);
        let refs = ReferenceVectorSet::from_lattice(&simplex_lattice(2, 99));
        let archive: Vec<Vec<f64>> = pop.iter().take(8).map(|c| c.x.clone()).collect();
        let s = select_new_samples(&pop, &plain_scores(&pop), &refs, 0.5, 3, &[], &archive, &mut rng).unwrap();
        assert_eq!(s.full.len(), 3);
        for x in &s.full {
            assert!(!is_duplicate(x, &archive));
        }
    }

    #[test]
    fn inner_search_improves_on_a_known_function() {
        // exact predictor: the search must not lose the best seed value
        let predict = |x: &[f64]| Ok((vec![x[0], 1.0 - x[0] + x.iter().skip(1).sum::<f64>()], vec![0.0, 0.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seeds = latin_hypercube(20, &[(0.0, 1.0); 4], 4);
        let mut refs = ReferenceVectorSet::for_objectives(2);
        let cfg = InnerSearchConfig {
            w_max: 1,
            population: refs.len(),
            variation: Variation::default(),
        };
        let pop = inner_surrogate_search(predict, &seeds, &mut refs, &cfg, &mut rng).unwrap();
        assert_eq!(pop.len(), cfg.population);
        assert!(pop.iter().all(|c| c.mean.len() == 2 && c.std.len() == 2));
        let best_seed = seeds.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
        let best = pop.iter().map(|c| c.mean[0]).fold(f64::INFINITY, f64::min);
        assert!(best <= best_seed);
    }

    #[test]
    fn config_validation() {
        let mut c = OptimizerConfig::default();
        assert!(c.validate(10).is_ok());
        c.fe_max_expensive = 50;
        assert!(c.validate(10).is_err());
        c = OptimizerConfig { u: 0, ..Default::default() };
        assert!(c.validate(10).is_err());
    }
}
