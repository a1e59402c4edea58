//! Reference-vector guided evolutionary machinery: sampling, variation,
//! angle-penalized selection and the single-objective GA used on cheap
//! objectives.

mod lhs;
mod operators;
mod reference;
mod soea;

pub use lhs::latin_hypercube;
pub use operators::{polynomial_delta, polynomial_mutation, sbx_crossover, sbx_pair, Variation};
pub use reference::{apd_select, apd_winners, default_lattice, simplex_lattice, ReferenceVectorSet, APD_ALPHA};
pub use soea::{soea_optimize_cheap, SoeaConfig, SoeaOutcome};
