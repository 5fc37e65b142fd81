//! Plaintext fairness mathematics: the geometric attention model, relevance
//! normalization, DCG/NDCG, the amortized unfairness metric and the
//! sensitivity of one user's contribution to `A - R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalized geometric position weights `w_j = 0.5^j / sum_t 0.5^t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionModel {
    weights: Vec<f64>,
}

impl AttentionModel {
    pub fn geometric(n: usize) -> Result<Self> {
        Ok(AttentionModel {
            weights: attention_weights(n)?,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn max_weight(&self) -> f64 {
        self.weights[0]
    }

    pub fn min_weight(&self) -> f64 {
        self.weights[self.weights.len() - 1]
    }
}

pub fn attention_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("attention model needs at least one position"));
    }
    let raw: Vec<f64> = (0..n).map(|j| 0.5 * 0.5f64.powi(j as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::param(format!(
                "rating scale needs finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(RatingScale { min, max })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.min && x <= self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1.0, max: 5.0 }
    }
}

/// Min-max scale by the rating bounds, then divide by the sum. If every score
/// sits at `r_min` the sum is zero; the result is then uniform.
pub fn normalize_relevance(raw: &[f64], scale: RatingScale) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::Input("empty relevance vector".into()));
    }
    if let Some((i, x)) = raw.iter().enumerate().find(|(_, x)| !scale.contains(**x)) {
        return Err(Error::Input(format!(
            "relevance score {x} at item {i} outside [{}, {}]",
            scale.min, scale.max
        )));
    }
    let span = scale.max - scale.min;
    let scaled: Vec<f64> = raw.iter().map(|x| (x - scale.min) / span).collect();
    let total: f64 = scaled.iter().sum();
    if total <= 0.0 {
        let n = raw.len() as f64;
        return Ok(vec![1.0 / n; raw.len()]);
    }
    Ok(scaled.into_iter().map(|s| s / total).collect())
}

/// Items by descending score; equal scores keep ascending item order.
pub fn relevance_ranking(raw: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    order
}

/// One user's scores, their normalization, and the induced ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevanceProfile {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    ranking: Vec<usize>,
}

impl RelevanceProfile {
    pub fn new(raw: Vec<f64>, scale: RatingScale) -> Result<Self> {
        let normalized = normalize_relevance(&raw, scale)?;
        let ranking = relevance_ranking(&raw);
        Ok(RelevanceProfile {
            raw,
            normalized,
            ranking,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }
}

pub fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::param(format!(
            "permutation has {} entries, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::param(format!(
                "{order:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

#[inline]
pub fn gain(r_hat: f64) -> f64 {
    r_hat.exp2() - 1.0
}

/// Contribution of `gain` at zero-based position `pos`.
#[inline]
pub fn dcg_term(gain: f64, pos: usize) -> f64 {
    gain / ((pos + 2) as f64).log2()
}

/// DCG of the first `k` positions of `order` (position -> item).
pub fn dcg_at_k(r_hat: &[f64], order: &[usize], k: usize) -> Result<f64> {
    check_permutation(order, r_hat.len())?;
    if k == 0 || k > order.len() {
        return Err(Error::param(format!(
            "k must be in 1..={}, got {k}",
            order.len()
        )));
    }
    Ok(order[..k]
        .iter()
        .enumerate()
        .map(|(pos, &item)| dcg_term(gain(r_hat[item]), pos))
        .sum())
}

/// Full-list DCG of `reranked` over DCG of `original`. A zero denominator
/// (every normalized score zero) yields 1.
pub fn ndcg(original: &[usize], reranked: &[usize], r_hat: &[f64]) -> Result<f64> {
    let n = r_hat.len();
    let denom = dcg_at_k(r_hat, original, n)?;
    let num = dcg_at_k(r_hat, reranked, n)?;
    if denom <= 0.0 {
        return Ok(1.0);
    }
    Ok(num / denom)
}

/// `sum_i |A_i - R_i|`.
pub fn unfairness(attention: &[f64], relevance: &[f64]) -> Result<f64> {
    if attention.len() != relevance.len() {
        return Err(Error::param(format!(
            "unfairness: {} attention entries vs {} relevance entries",
            attention.len(),
            relevance.len()
        )));
    }
    Ok(attention
        .iter()
        .zip(relevance)
        .map(|(a, r)| (a - r).abs())
        .sum())
}

/// Largest change one user can make to any `A_i - R_i`, with normalized
/// relevance spanning `[0, 1]`: `max(|w_max - 0|, |w_min - 1|)`.
pub fn sensitivity(attention: &AttentionModel) -> f64 {
    let (r_min, r_max) = (0.0, 1.0);
    f64::max(
        (attention.max_weight() - r_min).abs(),
        (attention.min_weight() - r_max).abs(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn attention_examples() {
        assert_eq!(attention_weights(1).unwrap(), vec![1.0]);
        let w2 = attention_weights(2).unwrap();
        assert!(close(w2[0], 2.0 / 3.0, 1e-15) && close(w2[1], 1.0 / 3.0, 1e-15));
        let w3 = attention_weights(3).unwrap();
        for (w, e) in w3.iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert!(close(*w, e, 1e-15));
        }
        assert!(attention_weights(0).is_err());
    }

    #[test]
    fn attention_sums_to_one_and_decreases() {
        for n in 1..=200 {
            let w = attention_weights(n).unwrap();
            assert!(close(w.iter().sum(), 1.0, 1e-12));
            assert!(w.windows(2).all(|p| p[0] > p[1]));
        }
    }

    #[test]
    fn normalize_examples() {
        let s = RatingScale::new(1.0, 5.0).unwrap();
        assert_eq!(normalize_relevance(&[5.0, 1.0], s).unwrap(), vec![1.0, 0.0]);
        let r = normalize_relevance(&[5.0, 3.0, 1.0], s).unwrap();
        assert!(close(r[0], 2.0 / 3.0, 1e-15) && close(r[1], 1.0 / 3.0, 1e-15));
        assert_eq!(r[2], 0.0);
        assert_eq!(
            normalize_relevance(&[1.0, 1.0, 1.0, 1.0], s).unwrap(),
            vec![0.25; 4]
        );
        assert!(normalize_relevance(&[6.0, 1.0], s).is_err());
        assert!(normalize_relevance(&[], s).is_err());
        assert!(RatingScale::new(5.0, 1.0).is_err());
    }

    #[test]
    fn ranking_ties_by_index() {
        assert_eq!(relevance_ranking(&[3.0, 5.0, 3.0, 4.0]), vec![1, 3, 0, 2]);
    }

    #[test]
    fn dcg_examples() {
        let r = [1.0, 0.0];
        assert!(close(dcg_at_k(&r, &[0, 1], 2).unwrap(), 1.0, 1e-15));
        let swapped = dcg_at_k(&r, &[1, 0], 2).unwrap();
        assert!(close(swapped, 1.0 / 3f64.log2(), 1e-15));
        assert!(close(swapped, 0.6309, 1e-4));
        assert_eq!(dcg_at_k(&[0.0; 3], &[2, 0, 1], 3).unwrap(), 0.0);
        assert!(dcg_at_k(&r, &[0, 1], 0).is_err());
        assert!(dcg_at_k(&r, &[0, 1], 3).is_err());
        assert!(dcg_at_k(&r, &[0, 0], 2).is_err());
    }

    #[test]
    fn ndcg_examples() {
        let r = [0.5, 0.3, 0.2];
        assert_eq!(ndcg(&[0, 1, 2], &[0, 1, 2], &r).unwrap(), 1.0);
        let tied = [0.4, 0.4, 0.2];
        assert_eq!(ndcg(&[0, 1, 2], &[1, 0, 2], &tied).unwrap(), 1.0);
        let rev = ndcg(&[0, 1], &[1, 0], &[1.0, 0.0]).unwrap();
        assert!(close(rev, 0.6309, 1e-4));
        assert_eq!(ndcg(&[0, 1], &[1, 0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn unfairness_examples() {
        assert_eq!(unfairness(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert!(close(
            unfairness(&[0.5, 0.5], &[0.3, 0.7]).unwrap(),
            0.4,
            1e-15
        ));
        assert!(close(
            unfairness(&[2.0 / 3.0, 1.0 / 3.0], &[1.0, 0.0]).unwrap(),
            2.0 / 3.0,
            1e-15
        ));
        assert!(unfairness(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let s = |n| sensitivity(&AttentionModel::geometric(n).unwrap());
        assert!(close(s(100), 1.0, 1e-9));
        assert_eq!(s(1), 1.0);
        assert!(close(s(2), 2.0 / 3.0, 1e-12));
    }

    #[test]
    fn sensitivity_monotone_and_bounded() {
        // n = 1 is the special case max(1, 0) = 1; monotone from n = 2 on.
        let mut prev = 0.0;
        for n in 2..=128 {
            let s = sensitivity(&AttentionModel::geometric(n).unwrap());
            assert!(s <= 1.0);
            assert!(s >= prev, "n={n}: {s} < {prev}");
            prev = s;
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
            return false;
        };
        let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    proptest! {
        #[test]
        fn sorted_order_maximizes_dcg(
            raw in prop::collection::vec(1.0f64..5.0, 1..=6),
            k_frac in 0.0f64..1.0,
        ) {
            let n = raw.len();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let r = normalize_relevance(&raw, RatingScale::default()).unwrap();
            let best = dcg_at_k(&r, &relevance_ranking(&r), k).unwrap();
            let mut p: Vec<usize> = (0..n).collect();
            loop {
                prop_assert!(dcg_at_k(&r, &p, k).unwrap() <= best + 1e-12);
                if !next_permutation(&mut p) { break; }
            }
        }

        #[test]
        fn normalized_relevance_is_a_distribution(raw in prop::collection::vec(1.0f64..=5.0, 1..40)) {
            let r = normalize_relevance(&raw, RatingScale::default()).unwrap();
            prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(r.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }

        #[test]
        fn unfairness_symmetric_and_zero_iff_equal(
            a in prop::collection::vec(-5.0f64..5.0, 1..20),
            shift in prop::collection::vec(-1.0f64..1.0, 20),
        ) {
            let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
            prop_assert_eq!(unfairness(&a, &b).unwrap(), unfairness(&b, &a).unwrap());
            prop_assert_eq!(unfairness(&a, &a).unwrap(), 0.0);
            if a != b {
                prop_assert!(unfairness(&a, &b).unwrap() > 0.0);
            }
        }
    }
}
