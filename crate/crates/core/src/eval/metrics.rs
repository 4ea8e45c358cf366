//! Precision, NDCG and AAE of a reported top-k against the exact oracle.

use crate::schemes::TopKReport;

use super::oracle::ExactOracle;

/// Fraction of the true top-k found among the first `k` reported ids. The
/// denominator is `k`, or the true list length when the stream has fewer
/// than `k` distinct items.
pub fn precision(report: &TopKReport, oracle: &ExactOracle, k: usize) -> f64 {
    let truth = &oracle.top()[..oracle.top().len().min(k)];
    if truth.is_empty() {
        return 0.0;
    }
    let hits = report
        .entries
        .iter()
        .take(k)
        .filter(|(id, _)| truth.iter().any(|(t, _)| t == id))
        .count();
    hits as f64 / truth.len() as f64
}

/// Discount for 1-based position `i`: 1 at the head, `1/log2(i)` after.
pub fn position_discount(i: usize) -> f64 {
    if i <= 1 {
        1.0
    } else {
        1.0 / (i as f64).log2()
    }
}

/// `rel = |k - |rank_true - rank_reported||` for true top-k ids, else 0.
pub fn relevance(k: usize, true_rank: Option<usize>, reported_rank: usize) -> f64 {
    match true_rank {
        Some(r) => (k as f64 - (r as f64 - reported_rank as f64).abs()).abs(),
        None => 0.0,
    }
}

pub fn ndcg(report: &TopKReport, oracle: &ExactOracle, k: usize) -> f64 {
    let truth_len = oracle.top().len().min(k);
    if truth_len == 0 {
        return 0.0;
    }
    let dcg: f64 = report
        .entries
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &(id, _))| {
            let rank = oracle.rank(id).filter(|&r| r <= k);
            relevance(k, rank, pos + 1) * position_discount(pos + 1)
        })
        .sum();
    let idcg: f64 = (1..=truth_len)
        .map(|i| k as f64 * position_discount(i))
        .sum();
    dcg / idcg
}

/// Mean `|f - max(estimate, 0)|` over the true top-k; ids outside the first
/// `k` reported entries count as estimate 0.
pub fn aae(report: &TopKReport, oracle: &ExactOracle, k: usize) -> f64 {
    let truth = &oracle.top()[..oracle.top().len().min(k)];
    if truth.is_empty() {
        return 0.0;
    }
    let total: f64 = truth
        .iter()
        .map(|&(id, f)| {
            let est = report
                .entries
                .iter()
                .take(k)
                .find(|(r, _)| *r == id)
                .map_or(0.0, |e| e.1)
                .max(0.0);
            (f as f64 - est).abs()
        })
        .sum();
    total / truth.len() as f64
}
