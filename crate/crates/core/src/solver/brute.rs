use super::{RerankProblem, Reranking};
use crate::error::{Error, Result};

pub const BRUTE_FORCE_MAX_N: usize = 8;

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("pivot exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Enumerates all `n!` permutations in lexicographic order. Refuses
/// `n > 8`.
pub fn brute_force(problem: &RerankProblem) -> Result<Reranking> {
    let n = problem.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::param(format!(
            "brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        if problem.is_feasible(&perm) {
            best = best.min(problem.objective(&perm));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    if best.is_infinite() {
        return Err(Error::protocol("no permutation satisfies the DCG floor"));
    }
    let threshold = best + problem.tie_tolerance();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        if problem.is_feasible(&perm) && problem.objective(&perm) <= threshold {
            return Reranking::new(perm);
        }
        if !next_permutation(&mut perm) {
            unreachable!("minimum was attained by some permutation");
        }
    }
}
