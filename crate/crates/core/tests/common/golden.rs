//! Hand-enumerated metric cases and an independent brute-force oracle.

use ldp_topk::Item;

pub struct Golden {
    pub name: &'static str,
    pub stream: &'static [Item],
    pub k: usize,
    pub report: &'static [(Item, f64)],
    pub precision: f64,
    pub ndcg: f64,
    pub aae: f64,
}

pub const GOLDEN: &[Golden] = &[
    Golden { name: "single", stream: &[1, 1, 2], k: 1, report: &[(1, 2.0)], precision: 1.0, ndcg: 1.0, aae: 0.0 },
    // DCG = 2 + 2 + 3/log2 3, IDCG = 3 + 3 + 3/log2 3
    Golden { name: "swap", stream: &[0, 0, 0, 1, 1, 2], k: 3, report: &[(1, 2.0), (0, 3.0), (2, 1.0)], precision: 1.0, ndcg: 0.746_604_155_522_710_5, aae: 0.0 },
    // DCG = 0 + 2, IDCG = 3 (2 + 1/log2 3); AAE = (2 + 2 + 1) / 3
    Golden { name: "miss-and-offset", stream: &[0, 0, 0, 1, 1, 2], k: 3, report: &[(3, 5.0), (0, 1.0)], precision: 1.0 / 3.0, ndcg: 0.253_395_844_477_289_47, aae: 5.0 / 3.0 },
    // tie 4/5 broken by lower id: truth [4, 5]
    Golden { name: "tie", stream: &[5, 4, 5, 4, 3], k: 2, report: &[(5, 2.0), (4, 2.0)], precision: 1.0, ndcg: 0.5, aae: 0.0 },
    Golden { name: "negative-clip", stream: &[0, 0, 1], k: 2, report: &[(0, 2.0), (1, -3.0)], precision: 1.0, ndcg: 1.0, aae: 0.5 },
    Golden { name: "short-truth", stream: &[7, 7, 7], k: 3, report: &[(7, 3.0), (2, 1.0)], precision: 1.0, ndcg: 1.0, aae: 0.0 },
    Golden { name: "empty-report", stream: &[1, 2, 2, 3, 3, 3], k: 2, report: &[], precision: 0.0, ndcg: 0.0, aae: 2.5 },
    // reversed order of four: rel = (1, 3, 3, 1)
    Golden { name: "reversed", stream: &[0, 1, 1, 2, 2, 2, 3, 3, 3, 3], k: 4, report: &[(0, 1.0), (1, 2.0), (2, 3.0), (3, 4.0)], precision: 1.0, ndcg: 0.510_454_542_570_150_7, aae: 0.0 },
    Golden { name: "disjoint", stream: &[0, 0, 1, 1, 1, 2, 9, 9, 9, 9], k: 2, report: &[(0, 2.0), (2, 1.0)], precision: 0.0, ndcg: 0.0, aae: 3.5 },
];

/// Independent brute-force metrics.
pub fn naive(stream: &[Item], report: &[(Item, f64)], k: usize) -> (f64, f64, f64) {
    let mut counts = std::collections::BTreeMap::<Item, u64>::new();
    for &v in stream {
        *counts.entry(v).or_default() += 1;
    }
    // rank = 1 + number of items strictly ahead
    let rank = |id: Item| -> Option<usize> {
        let c = *counts.get(&id)?;
        let ahead = counts.iter().filter(|&(&j, &cj)| cj > c || (cj == c && j < id)).count();
        (ahead < k).then_some(ahead + 1)
    };
    let truth: Vec<Item> = counts.keys().copied().filter(|&i| rank(i).is_some()).collect();
    let t = truth.len() as f64;
    let rep: Vec<(Item, f64)> = report.iter().take(k).copied().collect();
    let hits = rep.iter().filter(|(i, _)| rank(*i).is_some()).count() as f64;
    let disc = |i: usize| if i == 1 { 1.0 } else { 1.0 / (i as f64).log2() };
    let dcg: f64 = rep
        .iter()
        .enumerate()
        .map(|(p, (i, _))| rank(*i).map_or(0.0, |r| (k as f64 - (r as f64 - (p + 1) as f64).abs()).abs() * disc(p + 1)))
        .sum();
    let idcg: f64 = (1..=truth.len()).map(|i| k as f64 * disc(i)).sum();
    let aae: f64 = truth
        .iter()
        .map(|i| {
            let est = rep.iter().find(|(j, _)| j == i).map_or(0.0, |e| e.1.max(0.0));
            (counts[i] as f64 - est).abs()
        })
        .sum::<f64>();
    if truth.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    (hits / t, dcg / idcg, aae / t)
}

