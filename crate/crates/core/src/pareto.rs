//! Pareto dominance utilities (minimization).

/// `a` dominates `b`: no worse everywhere, strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated members of `points`. Exact duplicates are
/// all retained.
pub fn nondominated_indices<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(q.as_ref(), points[i].as_ref()))
        })
        .collect()
}

/// Non-dominated subset with exact duplicates removed.
pub fn nondominated_filter(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut sorted: Vec<&Vec<f64>> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted.dedup();
    // After a lexicographic sort a point can only be dominated by an earlier one.
    let mut front: Vec<&Vec<f64>> = Vec::new();
    for p in sorted {
        if !front.iter().any(|q| dominates(q, p)) {
            front.push(p);
        }
    }
    front.into_iter().cloned().collect()
}

/// Crowding distance of each point within the set. Boundary points get
/// `f64::INFINITY`.
pub fn crowding_distance<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let n = points.len();
    let mut distance = vec![0.0; n];
    if n == 0 {
        return distance;
    }
    let m = points[0].as_ref().len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| points[a].as_ref()[k].total_cmp(&points[b].as_ref()[k]));
        let lo = points[order[0]].as_ref()[k];
        let hi = points[order[n - 1]].as_ref()[k];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in 1..n.saturating_sub(1) {
            let prev = points[order[w - 1]].as_ref()[k];
            let next = points[order[w + 1]].as_ref()[k];
            distance[order[w]] += (next - prev) / span;
        }
    }
    distance
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_basics() {
        assert!(dominates(&[0.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates(&[0.0, 2.0], &[1.0, 1.0]));
    }

    #[test]
    fn filter_matches_brute_force() {
        let pts = vec![
            vec![1.0, 4.0],
            vec![2.0, 2.0],
            vec![2.0, 3.0],
            vec![4.0, 1.0],
            vec![2.0, 2.0],
            vec![5.0, 5.0],
        ];
        let idx = nondominated_indices(&pts);
        assert_eq!(idx, vec![0, 1, 3, 4]);
        let f = nondominated_filter(&pts);
        assert_eq!(f, vec![vec![1.0, 4.0], vec![2.0, 2.0], vec![4.0, 1.0]]);
    }

    #[test]
    fn crowding_marks_extremes() {
        let pts = vec![vec![0.0, 3.0], vec![1.0, 2.0], vec![3.0, 0.0]];
        let d = crowding_distance(&pts);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
    }
}
