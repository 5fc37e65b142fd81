//! Shortest-augmenting-path Hungarian method on a dense square matrix of
//! `f64` costs, `O(m^3)`.

/// Minimum-cost perfect matching. `cost` is row-major `m x m`. Returns the
/// column assigned to each row and the total cost, summed from the matrix
/// entries in row order.
pub fn solve_assignment(cost: &[f64], m: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), m * m, "cost matrix must be {m}x{m}");
    if m == 0 {
        return (Vec::new(), 0.0);
    }
    let at = |i: usize, j: usize| cost[(i - 1) * m + (j - 1)];
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; m + 1];
    // owner[j]: row matched to column j (1-based, 0 = none)
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut minv = vec![f64::INFINITY; m + 1];
    let mut used = vec![false; m + 1];

    for row in 1..=m {
        owner[0] = row;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = at(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; m];
    for j in 1..=m {
        assignment[owner[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * m + j])
        .sum();
    (assignment, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Exact minimum over all assignments by dynamic programming on subsets.
    fn subset_dp(cost: &[f64], m: usize) -> f64 {
        let mut best = vec![f64::INFINITY; 1 << m];
        best[0] = 0.0;
        for mask in 0..(1usize << m) {
            let row = mask.count_ones() as usize;
            if row >= m || best[mask].is_infinite() {
                continue;
            }
            for col in 0..m {
                if mask & (1 << col) == 0 {
                    let next = mask | (1 << col);
                    best[next] = best[next].min(best[mask] + cost[row * m + col]);
                }
            }
        }
        best[(1 << m) - 1]
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (assign, total) = solve_assignment(&cost, 3);
        assert_eq!(total, 5.0);
        let mut cols = assign.clone();
        cols.sort();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(solve_assignment(&[], 0), (vec![], 0.0));
        assert_eq!(solve_assignment(&[-2.5], 1), (vec![0], -2.5));
    }

    #[test]
    fn matches_subset_dp() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..300 {
            let m = rng.random_range(1..=9);
            let cost: Vec<f64> = (0..m * m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (assign, total) = solve_assignment(&cost, m);
            let mut seen = vec![false; m];
            for &j in &assign {
                assert!(!seen[j]);
                seen[j] = true;
            }
            assert!((total - subset_dp(&cost, m)).abs() < 1e-9);
        }
    }
}
