use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Latin hypercube sample of `n` points: in every dimension each of the
/// `n` equal-width bins holds exactly one point.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![Vec::with_capacity(bounds.len()); n];
    let mut bins: Vec<usize> = (0..n).collect();
    for &(lo, hi) in bounds {
        bins.shuffle(&mut rng);
        for (p, &bin) in points.iter_mut().zip(&bins) {
            let u = (bin as f64 + rng.gen::<f64>()) / n as f64;
            p.push((lo + u * (hi - lo)).clamp(lo, hi));
        }
    }
    points
}
