//! Inverted generational distance indicators.

use crate::error::{Error, Result};

fn check(a: &[Vec<f64>], z: &[Vec<f64>]) -> Result<usize> {
    let m = z.first().ok_or(Error::Empty("reference set"))?.len();
    if a.is_empty() {
        return Err(Error::Empty("solution set"));
    }
    for p in a.iter().chain(z) {
        if p.len() != m {
            return Err(Error::Dimension { expected: m, got: p.len() });
        }
    }
    Ok(m)
}

/// Dominance-aware distance: only the amount by which `a` is worse than `z`
/// counts.
pub fn modified_distance(a: &[f64], z: &[f64]) -> f64 {
    a.iter()
        .zip(z)
        .map(|(ak, zk)| (ak - zk).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn euclidean(a: &[f64], z: &[f64]) -> f64 {
    a.iter().zip(z).map(|(ak, zk)| (ak - zk).powi(2)).sum::<f64>().sqrt()
}

fn mean_min<F: Fn(&[f64], &[f64]) -> f64>(a: &[Vec<f64>], z: &[Vec<f64>], dist: F) -> f64 {
    z.iter()
        .map(|zp| a.iter().map(|ap| dist(ap, zp)).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / z.len() as f64
}

/// IGD+ of solution set `a` against reference set `z` (minimization).
pub fn igd_plus(a: &[Vec<f64>], z: &[Vec<f64>]) -> Result<f64> {
    check(a, z)?;
    Ok(mean_min(a, z, modified_distance))
}

pub fn igd(a: &[Vec<f64>], z: &[Vec<f64>]) -> Result<f64> {
    check(a, z)?;
    Ok(mean_min(a, z, euclidean))
}
