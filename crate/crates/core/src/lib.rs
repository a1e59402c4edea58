//! Surrogate-assisted multi-objective optimization for problems whose
//! objectives differ in evaluation cost.

pub mod acquisition;
pub mod benchmarks;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod pareto;
pub mod problem;

pub use error::{Error, Result};
