//! Heterogeneous multi-objective problem model.
//!
//! Every objective carries an integer evaluation ratio `r_i`: the number of
//! times it can be evaluated during one evaluation of the slowest objective.
//! Objectives whose ratio exceeds the threshold are *cheap*, the others are
//! *expensive*. Budgets are accounted combinatorially through [`BudgetLedger`];
//! no wall clock is simulated.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box-constrained decision vector, one entry per decision variable.
pub type DecisionVector = Vec<f64>;

/// Objective values together with a mask of which entries were evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ObjectiveVector {
    pub fn complete(values: Vec<f64>) -> Self {
        let mask = vec![true; values.len()];
        Self { values, mask }
    }

    /// A vector of length `m` where only component `index` is evaluated.
    pub fn single(m: usize, index: usize, value: f64) -> Self {
        let mut values = vec![0.0; m];
        let mut mask = vec![false; m];
        values[index] = value;
        mask[index] = true;
        Self { values, mask }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The value of objective `i`, or `None` when it was not evaluated.
    pub fn get(&self, i: usize) -> Option<f64> {
        self.mask
            .get(i)
            .copied()
            .filter(|&m| m)
            .map(|_| self.values[i])
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    /// All values, available only when every component was evaluated.
    pub fn values(&self) -> Option<&[f64]> {
        self.is_complete().then_some(self.values.as_slice())
    }

    pub fn into_values(self) -> Option<Vec<f64>> {
        self.is_complete().then_some(self.values)
    }
}

/// Black-box objective functions over a box-constrained decision space.
///
/// Implementations must be deterministic and free of side effects; all
/// budget accounting happens in [`HeterogeneousProblem`].
pub trait Objectives: Send + Sync + fmt::Debug {
    fn num_objectives(&self) -> usize;

    fn bounds(&self) -> &[(f64, f64)];

    fn evaluate(&self, x: &[f64]) -> Vec<f64>;

    fn evaluate_one(&self, x: &[f64], index: usize) -> f64 {
        self.evaluate(x)[index]
    }

    fn dimension(&self) -> usize {
        self.bounds().len()
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Objectives assembled from one closure per objective.
#[derive(Clone)]
pub struct FnObjectives {
    bounds: Vec<(f64, f64)>,
    functions: Vec<ScalarFn>,
}

impl FnObjectives {
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self {
            bounds,
            functions: Vec::new(),
        }
    }

    pub fn with<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.functions.push(Arc::new(f));
        self
    }
}

impl fmt::Debug for FnObjectives {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjectives")
            .field("bounds", &self.bounds)
            .field("functions", &self.functions.len())
            .finish()
    }
}

impl Objectives for FnObjectives {
    fn num_objectives(&self) -> usize {
        self.functions.len()
    }

    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.functions.iter().map(|f| f(x)).collect()
    }

    fn evaluate_one(&self, x: &[f64], index: usize) -> f64 {
        (self.functions[index])(x)
    }
}

/// Split of objective indices into cheap and expensive groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectivePartition {
    pub cheap: Vec<usize>,
    pub expensive: Vec<usize>,
}

impl ObjectivePartition {
    pub fn is_cheap(&self, index: usize) -> bool {
        self.cheap.contains(&index)
    }

    /// Position of objective `index` within the cheap list.
    pub fn cheap_slot(&self, index: usize) -> Option<usize> {
        self.cheap.iter().position(|&c| c == index)
    }
}

/// Objective `i` is cheap iff `ratios[i] > threshold`.
pub fn partition_objectives(ratios: &[u32], threshold: u32) -> Result<ObjectivePartition> {
    let (cheap, expensive): (Vec<usize>, Vec<usize>) =
        (0..ratios.len()).partition(|&i| ratios[i] > threshold);
    if expensive.is_empty() {
        return Err(Error::InvalidProblem(format!(
            "every objective is cheap for ratios {ratios:?} and threshold {threshold}"
        )));
    }
    Ok(ObjectivePartition { cheap, expensive })
}

/// Counts of consumed evaluations.
///
/// `fe_cheap` is aligned with [`ObjectivePartition::cheap`]. A full
/// evaluation charges one expensive evaluation and one evaluation of every
/// cheap objective.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub fe_expensive: usize,
    pub fe_cheap: Vec<usize>,
    pub fe_max_expensive: usize,
    cheap_indices: Vec<usize>,
}

impl BudgetLedger {
    pub fn new(partition: &ObjectivePartition, fe_max_expensive: usize) -> Self {
        Self {
            fe_expensive: 0,
            fe_cheap: vec![0; partition.cheap.len()],
            fe_max_expensive,
            cheap_indices: partition.cheap.clone(),
        }
    }

    pub fn remaining_expensive(&self) -> usize {
        self.fe_max_expensive.saturating_sub(self.fe_expensive)
    }

    pub fn is_exhausted(&self) -> bool {
        self.fe_expensive >= self.fe_max_expensive
    }

    /// Evaluations consumed by cheap objective `index` (an objective index,
    /// not a slot).
    pub fn cheap_count(&self, index: usize) -> Option<usize> {
        self.cheap_indices
            .iter()
            .position(|&c| c == index)
            .map(|slot| self.fe_cheap[slot])
    }

    fn charge_full(&mut self) -> Result<()> {
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted {
                used: self.fe_expensive,
                cap: self.fe_max_expensive,
            });
        }
        self.fe_expensive += 1;
        for c in &mut self.fe_cheap {
            *c += 1;
        }
        Ok(())
    }

    fn charge_cheap(&mut self, index: usize) -> Result<()> {
        let slot = self
            .cheap_indices
            .iter()
            .position(|&c| c == index)
            .ok_or(Error::NotCheap { index })?;
        self.fe_cheap[slot] += 1;
        Ok(())
    }
}

/// A multi-objective problem with per-objective evaluation ratios.
#[derive(Debug, Clone)]
pub struct HeterogeneousProblem {
    name: String,
    objectives: Arc<dyn Objectives>,
    ratios: Vec<u32>,
    threshold: u32,
    partition: ObjectivePartition,
}

impl HeterogeneousProblem {
    pub fn new(
        name: impl Into<String>,
        objectives: Arc<dyn Objectives>,
        ratios: Vec<u32>,
        threshold: u32,
    ) -> Result<Self> {
        let m = objectives.num_objectives();
        if m < 2 {
            return Err(Error::InvalidProblem(format!(
                "at least two objectives required, got {m}"
            )));
        }
        if ratios.len() != m {
            return Err(Error::InvalidProblem(format!(
                "{} ratios supplied for {m} objectives",
                ratios.len()
            )));
        }
        if ratios.iter().any(|&r| r == 0) {
            return Err(Error::InvalidProblem("ratios must be >= 1".into()));
        }
        if ratios.iter().min() != Some(&1) {
            return Err(Error::InvalidProblem(
                "the slowest objective must have ratio 1".into(),
            ));
        }
        if objectives.bounds().iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidProblem("empty bound interval".into()));
        }
        let partition = partition_objectives(&ratios, threshold)?;
        Ok(Self {
            name: name.into(),
            objectives,
            ratios,
            threshold,
            partition,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_objectives(&self) -> usize {
        self.ratios.len()
    }

    pub fn dimension(&self) -> usize {
        self.objectives.dimension()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        self.objectives.bounds()
    }

    pub fn ratios(&self) -> &[u32] {
        &self.ratios
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn partition(&self) -> &ObjectivePartition {
        &self.partition
    }

    pub fn objectives(&self) -> &Arc<dyn Objectives> {
        &self.objectives
    }

    /// Same objectives with different ratios and threshold.
    pub fn with_ratios(&self, ratios: Vec<u32>, threshold: u32) -> Result<Self> {
        Self::new(self.name.clone(), self.objectives.clone(), ratios, threshold)
    }

    pub fn new_ledger(&self, fe_max_expensive: usize) -> BudgetLedger {
        BudgetLedger::new(&self.partition, fe_max_expensive)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        let bounds = self.bounds();
        if x.len() != bounds.len() {
            return Err(Error::Dimension {
                expected: bounds.len(),
                got: x.len(),
            });
        }
        for (i, (&v, &(lo, hi))) in x.iter().zip(bounds).enumerate() {
            if !(lo..=hi).contains(&v) {
                return Err(Error::Domain(format!(
                    "x[{i}] = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates every objective at `x`, charging one full evaluation.
    pub fn evaluate_full(&self, x: &[f64], ledger: &mut BudgetLedger) -> Result<ObjectiveVector> {
        self.check_point(x)?;
        ledger.charge_full()?;
        Ok(ObjectiveVector::complete(self.objectives.evaluate(x)))
    }

    /// Evaluates cheap objective `index` alone.
    pub fn evaluate_cheap(&self, x: &[f64], index: usize, ledger: &mut BudgetLedger) -> Result<f64> {
        if !self.partition.is_cheap(index) {
            return Err(Error::NotCheap { index });
        }
        self.check_point(x)?;
        ledger.charge_cheap(index)?;
        Ok(self.objectives.evaluate_one(x, index))
    }

    /// Evaluates without touching any budget. Intended for reference-front
    /// construction and diagnostics, never for the optimizer itself.
    pub fn evaluate_unmetered(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.evaluate(x)
    }

    /// Maps `x` from the problem box into the unit cube.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.bounds())
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.bounds())
            .map(|(&v, &(lo, hi))| (lo + v * (hi - lo)).clamp(lo, hi))
            .collect()
    }
}
