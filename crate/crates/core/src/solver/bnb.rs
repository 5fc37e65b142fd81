//! Exact branch-and-bound over positions.
//!
//! Positions are filled left to right. A node's lower bound is the better of
//! two relaxations of the remaining subproblem, both solved as plain
//! assignments:
//!
//! * drop the DCG floor (multiplier 0);
//! * move the floor into the objective with a fixed multiplier `lambda`
//!   chosen at the root by bisection on the Lagrangian dual.
//!
//! A node is also dropped when even the best possible arrangement of the
//! remaining items cannot reach the DCG floor.
//!
//! Phase one finds the optimal objective `c*`. Phase two fixes positions left
//! to right, each time taking the smallest item for which some feasible
//! completion stays within the tie tolerance of `c*`. The result is the
//! lexicographically first such permutation and does not depend on search
//! order.

use super::hungarian::solve_assignment;
use super::{RerankProblem, Reranking, FEASIBILITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::fairness::dcg_term;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub optimize_nodes: u64,
    pub tiebreak_nodes: u64,
    pub assignments_solved: u64,
}

pub fn solve(problem: &RerankProblem) -> Result<Reranking> {
    solve_with_stats(problem).map(|(r, _)| r)
}

pub fn solve_with_stats(problem: &RerankProblem) -> Result<(Reranking, SolveStats)> {
    let mut search = Search::new(problem);
    search.optimize()?;
    let order = search.tiebreak()?;
    Ok((Reranking::new(order)?, search.stats))
}

/// Relaxed completion of a partial permutation.
struct Completion {
    bound: f64,
    /// Items for positions `depth..n`.
    items: Vec<usize>,
    dcg: f64,
}

struct Search<'a> {
    p: &'a RerankProblem,
    n: usize,
    k: usize,
    /// Floor with the feasibility slack already subtracted.
    floor: f64,
    lambda: f64,
    by_gain: Vec<usize>,
    gain_max: f64,
    order: Vec<usize>,
    used: Vec<bool>,
    best: Option<(f64, Vec<usize>)>,
    scratch: Vec<f64>,
    stats: SolveStats,
}

impl<'a> Search<'a> {
    fn new(p: &'a RerankProblem) -> Self {
        let n = p.n();
        let mut by_gain: Vec<usize> = (0..n).collect();
        by_gain.sort_by(|&a, &b| p.gains()[b].total_cmp(&p.gains()[a]).then(a.cmp(&b)));
        let gain_max = p.gains()[by_gain[0]].max(0.0);
        Search {
            p,
            n,
            k: p.k(),
            floor: p.dcg_target() - FEASIBILITY_TOLERANCE,
            lambda: 0.0,
            by_gain,
            gain_max,
            order: vec![usize::MAX; n],
            used: vec![false; n],
            best: None,
            scratch: Vec::with_capacity(n * n),
            stats: SolveStats::default(),
        }
    }

    fn discount(&self, pos: usize) -> f64 {
        if pos < self.k {
            dcg_term(1.0, pos)
        } else {
            0.0
        }
    }

    fn slack(&self) -> f64 {
        self.p.tie_tolerance() / 4.0
    }

    /// Upper bound on DCG@k reachable from a prefix of length `depth`.
    fn dcg_upper(&self, depth: usize, prefix_dcg: f64) -> f64 {
        let mut ub = prefix_dcg;
        let mut pos = depth;
        for &i in &self.by_gain {
            if pos >= self.k {
                break;
            }
            if !self.used[i] {
                ub += dcg_term(self.p.gains()[i], pos);
                pos += 1;
            }
        }
        ub
    }

    fn dcg_reachable(&self, depth: usize, prefix_dcg: f64) -> bool {
        self.dcg_upper(depth, prefix_dcg) >= self.floor - FEASIBILITY_TOLERANCE
    }

    /// Solves the relaxed completion from `depth` with multiplier `lambda`.
    fn relax(
        &mut self,
        depth: usize,
        prefix_cost: f64,
        prefix_dcg: f64,
        lambda: f64,
    ) -> Completion {
        self.stats.assignments_solved += 1;
        let items: Vec<usize> = (0..self.n).filter(|&i| !self.used[i]).collect();
        let m = items.len();
        self.scratch.clear();
        for &i in &items {
            let g = self.p.gains()[i];
            for pos in depth..self.n {
                let c = self.p.cost(i, pos);
                self.scratch.push(if lambda > 0.0 {
                    c - lambda * g * self.discount(pos)
                } else {
                    c
                });
            }
        }
        let (assign, value) = solve_assignment(&self.scratch, m);
        let mut placed = vec![usize::MAX; m];
        for (r, &c) in assign.iter().enumerate() {
            placed[c] = items[r];
        }
        let dcg = placed
            .iter()
            .enumerate()
            .filter(|(c, _)| depth + c < self.k)
            .map(|(c, &i)| dcg_term(self.p.gains()[i], depth + c))
            .sum::<f64>();
        let bound = prefix_cost + value + lambda * (self.floor - prefix_dcg);
        // Rounding allowance so the bound stays a bound.
        let magnitude = prefix_cost.abs()
            + m as f64 * (self.p.max_cost() + lambda * self.gain_max)
            + lambda * self.floor.abs();
        let allowance = 4.0 * f64::EPSILON * (m as f64 + 2.0) * magnitude;
        Completion {
            bound: bound - allowance,
            items: placed,
            dcg,
        }
    }

    fn offer(&mut self, order: &[usize]) {
        debug_assert_eq!(order.len(), self.n);
        if !self.p.is_feasible(order) {
            return;
        }
        let value = self.p.objective(order);
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, order.to_vec()));
        }
    }

    fn offer_completion(&mut self, depth: usize, completion: &Completion) {
        let mut full = self.order[..depth].to_vec();
        full.extend_from_slice(&completion.items);
        self.offer(&full);
    }

    fn incumbent(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |(b, _)| *b)
    }

    /// Root multiplier by bisection on the sign of the dual subgradient.
    fn choose_lambda(&mut self) {
        if self.floor <= 0.0 || self.gain_max <= 0.0 {
            return;
        }
        let mut best_lambda = 0.0;
        let mut best_bound = f64::NEG_INFINITY;
        let mut probe = |s: &mut Self, lambda: f64| -> bool {
            let c = s.relax(0, 0.0, 0.0, lambda);
            if c.bound > best_bound {
                best_bound = c.bound;
                best_lambda = lambda;
            }
            let feasible = c.dcg >= s.floor;
            if feasible {
                s.offer_completion(0, &c);
            }
            feasible
        };
        if probe(self, 0.0) {
            return;
        }
        let mut lo = 0.0;
        let mut hi = (self.p.max_cost() / self.gain_max).max(f64::MIN_POSITIVE);
        let mut reached = false;
        for _ in 0..80 {
            if probe(self, hi) {
                reached = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if reached {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if probe(self, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        self.lambda = best_lambda;
    }

    fn node_bound(&mut self, depth: usize, prefix_cost: f64, prefix_dcg: f64) -> (f64, Completion) {
        let free = self.relax(depth, prefix_cost, prefix_dcg, 0.0);
        let mut bound = free.bound;
        if self.lambda > 0.0 && depth < self.n {
            let lag = self.relax(depth, prefix_cost, prefix_dcg, self.lambda);
            bound = bound.max(lag.bound);
            if lag.dcg + prefix_dcg >= self.floor {
                self.offer_completion(depth, &lag);
            }
        }
        (bound, free)
    }

    fn optimize(&mut self) -> Result<()> {
        let reference = self.p.reference().to_vec();
        self.offer(&reference);
        let root = self.relax(0, 0.0, 0.0, 0.0);
        if root.dcg >= self.floor {
            // Unconstrained optimum already meets the floor.
            self.offer_completion(0, &root);
            return Ok(());
        }
        self.choose_lambda();
        self.branch(0, 0.0, 0.0);
        if self.best.is_none() {
            return Err(Error::protocol(
                "reranking problem is infeasible; the relevance order should always qualify",
            ));
        }
        Ok(())
    }

    fn branch(&mut self, depth: usize, prefix_cost: f64, prefix_dcg: f64) {
        self.stats.optimize_nodes += 1;
        if depth == self.n {
            let order = self.order.clone();
            self.offer(&order);
            return;
        }
        let mut children = Vec::new();
        for item in self.undominated(depth) {
            let (cost, dcg) = self.extend(depth, item, prefix_cost, prefix_dcg);
            self.used[item] = true;
            self.order[depth] = item;
            if self.dcg_reachable(depth + 1, dcg) {
                let (bound, free) = self.node_bound(depth + 1, cost, dcg);
                if free.dcg + dcg >= self.floor {
                    // Best completion of this subtree is already feasible.
                    self.offer_completion(depth + 1, &free);
                } else if bound < self.incumbent() - self.slack() {
                    children.push((bound, item, cost, dcg));
                }
            }
            self.used[item] = false;
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (bound, item, cost, dcg) in children {
            if bound >= self.incumbent() - self.slack() {
                continue;
            }
            self.used[item] = true;
            self.order[depth] = item;
            self.branch(depth + 1, cost, dcg);
            self.used[item] = false;
        }
    }

    fn tiebreak(&mut self) -> Result<Vec<usize>> {
        let (best, mut witness) = self.best.clone().expect("optimize found an incumbent");
        let threshold = best + self.p.tie_tolerance();
        self.used.fill(false);
        let mut prefix_cost = 0.0;
        let mut prefix_dcg = 0.0;
        for depth in 0..self.n {
            for item in 0..witness[depth] {
                if self.used[item] {
                    continue;
                }
                let (cost, dcg) = self.extend(depth, item, prefix_cost, prefix_dcg);
                self.used[item] = true;
                self.order[depth] = item;
                let found = self.dcg_reachable(depth + 1, dcg)
                    && self.exists(depth + 1, cost, dcg, threshold);
                self.used[item] = false;
                if found {
                    witness = self.order.clone();
                    break;
                }
            }
            let item = witness[depth];
            let (cost, dcg) = self.extend(depth, item, prefix_cost, prefix_dcg);
            self.used[item] = true;
            self.order[depth] = item;
            prefix_cost = cost;
            prefix_dcg = dcg;
        }
        Ok(witness)
    }

    fn extend(&self, depth: usize, item: usize, prefix_cost: f64, prefix_dcg: f64) -> (f64, f64) {
        let dcg = if depth < self.k {
            dcg_term(self.p.gains()[item], depth)
        } else {
            0.0
        };
        (prefix_cost + self.p.cost(item, depth), prefix_dcg + dcg)
    }

    /// Accepts a completion if the full order meets the floor and `threshold`.
    /// On success `self.order` holds the full order.
    fn accept(&mut self, depth: usize, items: &[usize], threshold: f64) -> bool {
        self.order[depth..].copy_from_slice(items);
        self.p.is_feasible(&self.order) && self.p.objective(&self.order) <= threshold
    }

    /// Whether some completion of the current prefix is feasible with
    /// objective at most `threshold`.
    fn exists(&mut self, depth: usize, prefix_cost: f64, prefix_dcg: f64, threshold: f64) -> bool {
        self.stats.tiebreak_nodes += 1;
        if depth == self.n {
            return self.p.is_feasible(&self.order) && self.p.objective(&self.order) <= threshold;
        }
        let free = self.relax(depth, prefix_cost, prefix_dcg, 0.0);
        if free.bound > threshold {
            return false;
        }
        if free.dcg + prefix_dcg >= self.floor && self.accept(depth, &free.items, threshold) {
            return true;
        }
        if self.lambda > 0.0 {
            let lag = self.relax(depth, prefix_cost, prefix_dcg, self.lambda);
            if lag.bound > threshold {
                return false;
            }
            if lag.dcg + prefix_dcg >= self.floor && self.accept(depth, &lag.items, threshold) {
                return true;
            }
        }
        let mut children = Vec::new();
        for item in self.undominated(depth) {
            let (cost, dcg) = self.extend(depth, item, prefix_cost, prefix_dcg);
            self.used[item] = true;
            self.order[depth] = item;
            if self.dcg_reachable(depth + 1, dcg) {
                let bound = self.lower_bound(depth + 1, cost, dcg);
                if bound <= threshold {
                    children.push((bound, item, cost, dcg));
                }
            }
            self.used[item] = false;
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, item, cost, dcg) in children {
            self.used[item] = true;
            self.order[depth] = item;
            let found = self.exists(depth + 1, cost, dcg, threshold);
            self.used[item] = false;
            if found {
                return true;
            }
        }
        false
    }

    /// Free items worth placing at `depth`. An item is skipped when another
    /// free item has the same cost row over the remaining positions up to a
    /// constant and at least its gain: swapping the two never raises the
    /// objective and never lowers DCG.
    fn undominated(&self, depth: usize) -> Vec<usize> {
        let free: Vec<usize> = (0..self.n).filter(|&i| !self.used[i]).collect();
        let eps = self.p.tie_tolerance() / (8.0 * self.n as f64);
        let gains = self.p.gains();
        let parallel = |a: usize, b: usize| {
            let offset = self.p.cost(a, depth) - self.p.cost(b, depth);
            (depth + 1..self.n)
                .all(|pos| (self.p.cost(a, pos) - self.p.cost(b, pos) - offset).abs() <= eps)
        };
        free.iter()
            .copied()
            .filter(|&b| {
                !free.iter().any(|&a| {
                    a != b
                        && (gains[a] > gains[b] || (gains[a] == gains[b] && a < b))
                        && parallel(a, b)
                })
            })
            .collect()
    }

    fn lower_bound(&mut self, depth: usize, prefix_cost: f64, prefix_dcg: f64) -> f64 {
        let mut bound = self.relax(depth, prefix_cost, prefix_dcg, 0.0).bound;
        if self.lambda > 0.0 && depth < self.n {
            bound = bound.max(
                self.relax(depth, prefix_cost, prefix_dcg, self.lambda)
                    .bound,
            );
        }
        bound
    }
}
