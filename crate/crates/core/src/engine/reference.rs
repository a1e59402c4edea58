use crate::error::{Error, Result};

/// Exponent of the generation ratio in the angle penalty.
pub const APD_ALPHA: f64 = 2.0;

/// Das–Dennis simplex lattice: all points with coordinates in
/// `{0, 1/h, ..., 1}` summing to one. Yields `C(h + m - 1, m - 1)` points.
pub fn simplex_lattice(m: usize, h: usize) -> Vec<Vec<f64>> {
    fn recurse(left: usize, slots: usize, h: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            current.push(left);
            out.push(current.iter().map(|&c| c as f64 / h as f64).collect());
            current.pop();
            return;
        }
        for v in 0..=left {
            current.push(v);
            recurse(left - v, slots - 1, h, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 || h == 0 {
        return out;
    }
    recurse(h, m, h, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Lattice used for the reference vectors: the smallest single layer with
/// at least 100 points for `m <= 5`; two layers `(3, 2)` beyond that, the
/// inner one shrunk halfway toward the centroid.
pub fn default_lattice(m: usize) -> Vec<Vec<f64>> {
    if m <= 5 {
        let mut h = 1;
        while simplex_lattice(m, h).len() < 100 {
            h += 1;
        }
        simplex_lattice(m, h)
    } else {
        let mut points = simplex_lattice(m, 3);
        let centre = 1.0 / m as f64;
        points.extend(
            simplex_lattice(m, 2)
                .into_iter()
                .map(|p| p.into_iter().map(|v| 0.5 * v + 0.5 * centre).collect::<Vec<_>>()),
        );
        points
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit reference vectors plus their range-adapted counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceVectorSet {
    base: Vec<Vec<f64>>,
    adapted: Vec<Vec<f64>>,
    gamma: Vec<f64>,
}

impl ReferenceVectorSet {
    pub fn from_lattice(points: &[Vec<f64>]) -> Self {
        let base: Vec<Vec<f64>> = points.iter().map(|p| normalized(p)).collect();
        let gamma = min_neighbour_angles(&base);
        Self {
            adapted: base.clone(),
            base,
            gamma,
        }
    }

    pub fn for_objectives(m: usize) -> Self {
        Self::from_lattice(&default_lattice(m))
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn base(&self) -> &[Vec<f64>] {
        &self.base
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.adapted
    }

    /// Smallest angle between each adapted vector and any other one.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Rescales the base vectors by the objective ranges.
    pub fn adapt(&mut self, z_min: &[f64], z_max: &[f64]) {
        let range: Vec<f64> = z_min
            .iter()
            .zip(z_max)
            .map(|(lo, hi)| (hi - lo).max(1e-12))
            .collect();
        self.adapted = self
            .base
            .iter()
            .map(|v| {
                let scaled: Vec<f64> = v.iter().zip(&range).map(|(a, r)| a * r).collect();
                normalized(&scaled)
            })
            .collect();
        self.gamma = min_neighbour_angles(&self.adapted);
    }

    pub fn reset(&mut self) {
        self.adapted = self.base.clone();
        self.gamma = min_neighbour_angles(&self.base);
    }
}

fn min_neighbour_angles(vectors: &[Vec<f64>]) -> Vec<f64> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let best = vectors
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, w)| dot(v, w))
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                best.clamp(-1.0, 1.0).acos().max(1e-12)
            } else {
                std::f64::consts::FRAC_PI_2
            }
        })
        .collect()
}

struct Assignment {
    vector: usize,
    apd: f64,
}

fn assign(scores: &[Vec<f64>], refs: &ReferenceVectorSet, progress: f64) -> Result<Vec<Assignment>> {
    let first = scores.first().ok_or(Error::Empty("population"))?;
    let m = first.len();
    let mut ideal = vec![f64::INFINITY; m];
    for s in scores {
        if s.len() != m {
            return Err(Error::Dimension { expected: m, got: s.len() });
        }
        for (z, &v) in ideal.iter_mut().zip(s) {
            *z = z.min(v);
        }
    }
    let penalty = m as f64 * progress.clamp(0.0, 1.0).powf(APD_ALPHA);
    Ok(scores
        .iter()
        .map(|s| {
            let shifted: Vec<f64> = s.iter().zip(&ideal).map(|(v, z)| v - z).collect();
            let norm = shifted.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (vector, cosine) = refs
                .vectors()
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let c = if norm > 0.0 { dot(&shifted, v) / norm } else { 1.0 };
                    (j, c)
                })
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
            // atan2 keeps small angles accurate where acos of a cosine near 1 does not
            let v = &refs.vectors()[vector];
            let along = cosine * norm;
            let perp = shifted
                .iter()
                .zip(v)
                .map(|(f, w)| (f - along * w).powi(2))
                .sum::<f64>()
                .sqrt();
            let theta = if norm > 0.0 { perp.atan2(along) } else { 0.0 };
            let apd = (1.0 + penalty * theta / refs.gamma()[vector]) * norm;
            Assignment { vector, apd }
        })
        .collect())
}

/// One member per occupied reference vector: the one minimizing the
/// angle-penalized distance. Returned in reference-vector order.
pub fn apd_winners(scores: &[Vec<f64>], refs: &ReferenceVectorSet, progress: f64) -> Result<Vec<usize>> {
    let assignments = assign(scores, refs, progress)?;
    let mut best: Vec<Option<usize>> = vec![None; refs.len()];
    for (i, a) in assignments.iter().enumerate() {
        let slot = &mut best[a.vector];
        match slot {
            Some(j) if assignments[*j].apd <= a.apd => {}
            _ => *slot = Some(i),
        }
    }
    Ok(best.into_iter().flatten().collect())
}

/// Angle-penalized distance selection of at most `n` members (indices into
/// `scores`).
///
/// `progress` is the generation ratio `t / t_max`. Winners of each
/// reference vector come first; when fewer than `n` vectors are occupied
/// the remainder is padded with the lowest-APD non-winners.
pub fn apd_select(scores: &[Vec<f64>], refs: &ReferenceVectorSet, progress: f64, n: usize) -> Result<Vec<usize>> {
    let assignments = assign(scores, refs, progress)?;
    let winners = apd_winners(scores, refs, progress)?;
    let by_apd = |a: &usize, b: &usize| assignments[*a].apd.total_cmp(&assignments[*b].apd).then(a.cmp(b));
    if winners.len() >= n {
        let mut chosen = winners;
        chosen.sort_by(by_apd);
        chosen.truncate(n);
        return Ok(chosen);
    }
    let mut is_winner = vec![false; scores.len()];
    for &w in &winners {
        is_winner[w] = true;
    }
    let mut rest: Vec<usize> = (0..scores.len()).filter(|&i| !is_winner[i]).collect();
    rest.sort_by(by_apd);
    let mut chosen = winners;
    chosen.extend(rest.into_iter().take(n - chosen.len()));
    Ok(chosen)
}
