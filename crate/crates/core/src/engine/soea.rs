use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operators::Variation;
use crate::error::{Error, Result};
use crate::problem::{BudgetLedger, HeterogeneousProblem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoeaConfig {
    /// Upper bound on the population size; the actual size is the smaller
    /// of this and the number of seed points.
    pub population: usize,
    pub tournament: usize,
    pub variation: Variation,
}

impl Default for SoeaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            tournament: 2,
            variation: Variation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoeaOutcome {
    /// Every point evaluated by the GA, in evaluation order.
    pub data: Vec<(Vec<f64>, f64)>,
    /// Best objective value in the population after each generation.
    pub best_history: Vec<f64>,
}

fn tournament<R: Rng>(pop: &[(Vec<f64>, f64)], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..size.max(1) {
        let c = rng.gen_range(0..pop.len());
        if pop[c].1 < pop[best].1 {
            best = c;
        }
    }
    best
}

/// Minimizes cheap objective `index` with a real-coded GA, spending exactly
/// `budget` cheap evaluations.
///
/// The initial population is the best of `seeds` (already evaluated points
/// with their `f_index` values), so it costs nothing. Replacement is
/// (mu + lambda).
pub fn soea_optimize_cheap(
    problem: &HeterogeneousProblem,
    index: usize,
    budget: usize,
    seeds: &[(Vec<f64>, f64)],
    ledger: &mut BudgetLedger,
    config: &SoeaConfig,
    seed: u64,
) -> Result<SoeaOutcome> {
    if !problem.partition().is_cheap(index) {
        return Err(Error::NotCheap { index });
    }
    let mut outcome = SoeaOutcome {
        data: Vec::with_capacity(budget),
        best_history: Vec::new(),
    };
    if budget == 0 {
        return Ok(outcome);
    }
    if seeds.is_empty() {
        return Err(Error::Empty("SOEA seed population"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = problem.bounds();
    let size = config.population.min(seeds.len()).max(2);

    let mut pop: Vec<(Vec<f64>, f64)> = seeds.to_vec();
    pop.sort_by(|a, b| a.1.total_cmp(&b.1));
    pop.truncate(size);
    if pop.len() < 2 {
        let extra = super::latin_hypercube(1, bounds, rng.gen())[0].clone();
        let v = problem.evaluate_cheap(&extra, index, ledger)?;
        outcome.data.push((extra.clone(), v));
        pop.push((extra, v));
    }

    while outcome.data.len() < budget {
        let mut offspring = Vec::with_capacity(pop.len());
        while offspring.len() < pop.len() && outcome.data.len() < budget {
            let a = tournament(&pop, config.tournament, &mut rng);
            let b = tournament(&pop, config.tournament, &mut rng);
            let (c1, c2) = config.variation.offspring(&pop[a].0, &pop[b].0, bounds, &mut rng);
            for child in [c1, c2] {
                if outcome.data.len() >= budget {
                    break;
                }
                let v = problem.evaluate_cheap(&child, index, ledger)?;
                outcome.data.push((child.clone(), v));
                offspring.push((child, v));
            }
        }
        pop.extend(offspring);
        pop.sort_by(|a, b| a.1.total_cmp(&b.1));
        pop.truncate(size);
        outcome.best_history.push(pop[0].1);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnObjectives;
    use std::sync::Arc;

    fn sphere_problem() -> HeterogeneousProblem {
        let objectives = FnObjectives::new(vec![(-1.0, 1.0); 4])
            .with(|x| x.iter().map(|v| v * v).sum())
            .with(|x| x.iter().map(|v| (v - 0.5).powi(2)).sum());
        HeterogeneousProblem::new("sphere", Arc::new(objectives), vec![5, 1], 1).unwrap()
    }

    fn seeds(p: &HeterogeneousProblem, n: usize) -> Vec<(Vec<f64>, f64)> {
        super::super::latin_hypercube(n, p.bounds(), 7)
            .into_iter()
            .map(|x| {
                let v = p.evaluate_unmetered(&x)[0];
                (x, v)
            })
            .collect()
    }

    #[test]
    fn zero_budget_is_empty() {
        let p = sphere_problem();
        let mut ledger = p.new_ledger(10);
        let out = soea_optimize_cheap(&p, 0, 0, &seeds(&p, 5), &mut ledger, &SoeaConfig::default(), 1).unwrap();
        assert!(out.data.is_empty());
        assert_eq!(ledger.fe_cheap, vec![0]);
    }

    #[test]
    fn spends_exactly_the_budget() {
        let p = sphere_problem();
        let mut ledger = p.new_ledger(10);
        let out = soea_optimize_cheap(&p, 0, 173, &seeds(&p, 20), &mut ledger, &SoeaConfig::default(), 2).unwrap();
        assert_eq!(out.data.len(), 173);
        assert_eq!(ledger.fe_cheap, vec![173]);
        assert_eq!(ledger.fe_expensive, 0);
    }

    #[test]
    fn best_so_far_never_worsens() {
        let p = sphere_problem();
        let mut ledger = p.new_ledger(10);
        let s = seeds(&p, 30);
        let out = soea_optimize_cheap(&p, 0, 600, &s, &mut ledger, &SoeaConfig::default(), 3).unwrap();
        assert!(out.best_history.windows(2).all(|w| w[1] <= w[0]));
        let seed_best = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!(*out.best_history.last().unwrap() < seed_best);
    }

    #[test]
    fn rejects_expensive_objective() {
        let p = sphere_problem();
        let mut ledger = p.new_ledger(10);
        assert!(soea_optimize_cheap(&p, 1, 10, &seeds(&p, 5), &mut ledger, &SoeaConfig::default(), 4).is_err());
    }
}
