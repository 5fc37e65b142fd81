//! The per-user reranking problem: an `n x n` assignment that minimizes the
//! accumulated unfairness cost `|xi_i + w_j - r_i|` subject to a DCG@k floor.
//!
//! [`solve`] is exact. [`brute_force`] enumerates every permutation and
//! exists to check it. Both return the lexicographically smallest
//! permutation among the optima, where objectives closer than
//! [`RerankProblem::tie_tolerance`] count as equal.

mod bnb;
mod brute;
mod hungarian;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{check_permutation, dcg_at_k, dcg_term, gain, relevance_ranking};

pub use bnb::{solve, solve_with_stats, SolveStats};
pub use brute::{brute_force, BRUTE_FORCE_MAX_N};
pub use hungarian::solve_assignment;

/// Absolute slack on the DCG floor.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// Relative (per item, per unit of the largest cost) width of a tie.
const TIE_RELATIVE: f64 = 1e-12;

/// A reranking as position -> item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reranking {
    order: Vec<usize>,
}

impl Reranking {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        check_permutation(&order, order.len())?;
        Ok(Reranking { order })
    }

    pub fn identity(n: usize) -> Self {
        Reranking {
            order: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Inverse permutation: item -> position.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (j, &i) in self.order.iter().enumerate() {
            pos[i] = j;
        }
        pos
    }

    /// Attention each item receives, `w*_i = w[position of i]`.
    pub fn attention_by_item(&self, w_hat: &[f64]) -> Vec<f64> {
        self.positions().into_iter().map(|j| w_hat[j]).collect()
    }

    /// The 0/1 matrix `X[i][j]` (item i at position j), row-major.
    pub fn assignment_matrix(&self) -> Vec<u8> {
        let n = self.order.len();
        let mut x = vec![0u8; n * n];
        for (j, &i) in self.order.iter().enumerate() {
            x[i * n + j] = 1;
        }
        x
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingMode {
    /// Use the revealed `xi` as is.
    None,
    /// Multiply `xi` by `epsilon / L` before building costs. This changes
    /// the optimum in general.
    Literal,
    /// Leave `xi` alone; normalize the whole cost matrix by its largest
    /// entry, which cannot change the argmin.
    #[default]
    ArgminPreserving,
}

pub fn apply_scaling(
    xi_raw: &[f64],
    mode: ScalingMode,
    epsilon: f64,
    users: usize,
) -> Result<Vec<f64>> {
    match mode {
        ScalingMode::None | ScalingMode::ArgminPreserving => Ok(xi_raw.to_vec()),
        ScalingMode::Literal => {
            if !(epsilon.is_finite() && epsilon > 0.0) || users == 0 {
                return Err(Error::param(format!(
                    "literal scaling needs epsilon > 0 and L > 0, got epsilon={epsilon}, L={users}"
                )));
            }
            let factor = epsilon / users as f64;
            Ok(xi_raw.iter().map(|x| x * factor).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RerankProblem {
    n: usize,
    k: usize,
    /// Row-major `cost[i * n + j]`: item i at position j.
    cost: Vec<f64>,
    gains: Vec<f64>,
    dcg_target: f64,
    /// Permutation known to meet the floor (the relevance ranking).
    reference: Vec<usize>,
    max_cost: f64,
}

pub fn build_problem(
    xi: &[f64],
    r_hat: &[f64],
    w_hat: &[f64],
    theta: f64,
    k: usize,
    original: &[usize],
) -> Result<RerankProblem> {
    let n = r_hat.len();
    if xi.len() != n || w_hat.len() != n {
        return Err(Error::param(format!(
            "dimension mismatch: xi={}, r_hat={n}, w_hat={}",
            xi.len(),
            w_hat.len()
        )));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param(format!(
            "theta must be in [0, 1], got {theta}"
        )));
    }
    let dcg_target = theta * dcg_at_k(r_hat, original, k)?;
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        for &w in w_hat {
            cost.push((xi[i] + w - r_hat[i]).abs());
        }
    }
    RerankProblem::assemble(cost, r_hat, k, dcg_target, original.to_vec())
}

impl RerankProblem {
    /// A problem over an arbitrary non-negative cost matrix.
    pub fn from_costs(cost: Vec<f64>, r_hat: &[f64], k: usize, dcg_target: f64) -> Result<Self> {
        let reference = relevance_ranking(r_hat);
        RerankProblem::assemble(cost, r_hat, k, dcg_target, reference)
    }

    fn assemble(
        cost: Vec<f64>,
        r_hat: &[f64],
        k: usize,
        dcg_target: f64,
        reference: Vec<usize>,
    ) -> Result<Self> {
        let n = r_hat.len();
        if n == 0 {
            return Err(Error::param("empty reranking problem"));
        }
        if cost.len() != n * n {
            return Err(Error::param(format!(
                "cost matrix has {} entries, expected {}",
                cost.len(),
                n * n
            )));
        }
        if k == 0 || k > n {
            return Err(Error::param(format!("k must be in 1..={n}, got {k}")));
        }
        if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::param(
                "cost coefficients must be finite and non-negative",
            ));
        }
        if !dcg_target.is_finite() {
            return Err(Error::param("DCG target must be finite"));
        }
        check_permutation(&reference, n)?;
        let max_cost = cost.iter().fold(0.0, |m: f64, &c| m.max(c));
        Ok(RerankProblem {
            n,
            k,
            cost,
            gains: r_hat.iter().map(|&r| gain(r)).collect(),
            dcg_target,
            reference,
            max_cost,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dcg_target(&self) -> f64 {
        self.dcg_target
    }

    #[inline]
    pub fn cost(&self, item: usize, pos: usize) -> f64 {
        self.cost[item * self.n + pos]
    }

    pub fn cost_matrix(&self) -> &[f64] {
        &self.cost
    }

    pub fn max_cost(&self) -> f64 {
        self.max_cost
    }

    pub(crate) fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub(crate) fn reference(&self) -> &[usize] {
        &self.reference
    }

    /// Multiplies every cost coefficient by `factor > 0`.
    pub fn scale_costs(&mut self, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::param(format!(
                "cost scale must be positive, got {factor}"
            )));
        }
        for c in &mut self.cost {
            *c *= factor;
        }
        self.max_cost *= factor;
        Ok(())
    }

    /// Divides the cost matrix by its largest entry (no-op on all zeros).
    pub fn normalize_costs(&mut self) {
        if self.max_cost > 0.0 {
            let inv = self.max_cost;
            for c in &mut self.cost {
                *c /= inv;
            }
            self.max_cost = 1.0;
        }
    }

    /// `sum_j cost[order[j]][j]`, accumulated in position order.
    pub fn objective(&self, order: &[usize]) -> f64 {
        order
            .iter()
            .enumerate()
            .map(|(j, &i)| self.cost(i, j))
            .sum()
    }

    /// DCG@k of `order`; same arithmetic as [`dcg_at_k`].
    pub fn dcg(&self, order: &[usize]) -> f64 {
        order[..self.k]
            .iter()
            .enumerate()
            .map(|(j, &i)| dcg_term(self.gains[i], j))
            .sum()
    }

    pub fn is_feasible(&self, order: &[usize]) -> bool {
        self.dcg(order) >= self.dcg_target - FEASIBILITY_TOLERANCE
    }

    /// Objectives within this distance of the optimum are ties.
    pub fn tie_tolerance(&self) -> f64 {
        TIE_RELATIVE * self.n as f64 * self.max_cost
    }
}
