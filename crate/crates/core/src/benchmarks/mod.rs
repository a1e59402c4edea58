//! Scalable DTLZ and WFG test problems and their reference fronts.

mod dtlz;
mod front;
mod wfg;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dtlz::Dtlz;
pub use front::{sample_reference_front, ReferenceFront};
pub use wfg::Wfg;

use crate::error::{Error, Result};
use crate::problem::{HeterogeneousProblem, Objectives};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchmarkFamily {
    Dtlz(u8),
    Wfg(u8),
}

impl fmt::Display for BenchmarkFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkFamily::Dtlz(i) => write!(f, "DTLZ{i}"),
            BenchmarkFamily::Wfg(i) => write!(f, "WFG{i}"),
        }
    }
}

impl FromStr for BenchmarkFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let parse = |digits: &str, max: u8| -> Option<u8> {
            digits.parse::<u8>().ok().filter(|i| (1..=max).contains(i))
        };
        let family = if let Some(rest) = upper.strip_prefix("DTLZ") {
            parse(rest, 7).map(BenchmarkFamily::Dtlz)
        } else if let Some(rest) = upper.strip_prefix("WFG") {
            parse(rest, 9).map(BenchmarkFamily::Wfg)
        } else {
            None
        };
        family.ok_or_else(|| Error::Spec(format!("unknown benchmark problem `{s}`")))
    }
}

/// A benchmark instance: family, objective count `m`, dimension `d` and,
/// for WFG, the number of position parameters `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub family: BenchmarkFamily,
    pub m: usize,
    pub d: usize,
    pub k: Option<usize>,
}

impl BenchmarkSpec {
    pub fn new(family: BenchmarkFamily, m: usize, d: usize) -> Self {
        Self { family, m, d, k: None }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    /// Default WFG position-parameter count: the largest multiple of
    /// `m - 1` not exceeding `d / 2`, or `m - 1` when no multiple fits.
    pub fn default_wfg_k(m: usize, d: usize) -> usize {
        let step = m.saturating_sub(1).max(1);
        let multiple = (d / 2) / step * step;
        if multiple == 0 {
            step
        } else {
            multiple
        }
    }

    /// Effective `k` (WFG only).
    pub fn position_parameters(&self) -> Option<usize> {
        match self.family {
            BenchmarkFamily::Wfg(_) => Some(self.k.unwrap_or_else(|| Self::default_wfg_k(self.m, self.d))),
            BenchmarkFamily::Dtlz(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Spec(format!("m = {} < 2", self.m)));
        }
        match self.family {
            BenchmarkFamily::Dtlz(_) => {
                if self.d < self.m {
                    return Err(Error::Spec(format!(
                        "DTLZ needs d >= m, got d = {} and m = {}",
                        self.d, self.m
                    )));
                }
                if self.k.is_some() {
                    return Err(Error::Spec("k applies to WFG problems only".into()));
                }
            }
            BenchmarkFamily::Wfg(variant) => {
                let k = self.position_parameters().unwrap_or_default();
                if k == 0 || k % (self.m - 1) != 0 {
                    return Err(Error::Spec(format!(
                        "WFG k = {k} must be a positive multiple of m - 1 = {}",
                        self.m - 1
                    )));
                }
                if k >= self.d {
                    return Err(Error::Spec(format!(
                        "WFG k = {k} must be smaller than d = {}",
                        self.d
                    )));
                }
                if matches!(variant, 2 | 3) && (self.d - k) % 2 != 0 {
                    return Err(Error::Spec(format!(
                        "WFG{variant} needs an even number of distance parameters, got {}",
                        self.d - k
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        self.family.to_string()
    }

    pub fn objectives(&self) -> Result<Arc<dyn Objectives>> {
        self.validate()?;
        Ok(match self.family {
            BenchmarkFamily::Dtlz(i) => Arc::new(Dtlz::new(i, self.m, self.d)),
            BenchmarkFamily::Wfg(i) => Arc::new(Wfg::new(
                i,
                self.m,
                self.d,
                self.position_parameters().unwrap_or_default(),
            )),
        })
    }
}

/// Builds a heterogeneous problem with the benchmark's canonical bounds.
pub fn make_problem(spec: &BenchmarkSpec, ratios: Vec<u32>, threshold: u32) -> Result<HeterogeneousProblem> {
    HeterogeneousProblem::new(spec.name(), spec.objectives()?, ratios, threshold)
}
