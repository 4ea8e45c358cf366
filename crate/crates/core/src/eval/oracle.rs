use crate::domain::Item;
use crate::error::{invalid, Result};

/// Exact histogram of a stream and its true top-k.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOracle {
    counts: Vec<u64>,
    n: u64,
    /// True top-k, count descending then id ascending.
    top: Vec<(Item, u64)>,
}

impl ExactOracle {
    pub fn new(stream: &[Item], d: u32, k: usize) -> Result<Self> {
        let mut counts = vec![0u64; d as usize];
        for &v in stream {
            *counts
                .get_mut(v as usize)
                .ok_or_else(|| invalid(format!("item {v} outside domain {d}")))? += 1;
        }
        Ok(Self::from_counts(counts, k))
    }

    pub fn from_counts(counts: Vec<u64>, k: usize) -> Self {
        let n = counts.iter().sum();
        let mut top: Vec<(Item, u64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i as Item, c))
            .collect();
        top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        top.truncate(k);
        Self { counts, n, top }
    }

    pub fn count(&self, item: Item) -> u64 {
        self.counts.get(item as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn top(&self) -> &[(Item, u64)] {
        &self.top
    }

    pub fn top_ids(&self) -> Vec<Item> {
        self.top.iter().map(|&(id, _)| id).collect()
    }

    /// 1-based true rank of `item` within the top list.
    pub fn rank(&self, item: Item) -> Option<usize> {
        self.top.iter().position(|&(id, _)| id == item).map(|p| p + 1)
    }

    /// Fraction of events whose item is in the true top list.
    pub fn hot_fraction(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.top.iter().map(|&(_, c)| c).sum::<u64>() as f64 / self.n as f64
    }
}

pub fn exact_topk(stream: &[Item], d: u32, k: usize) -> Result<ExactOracle> {
    ExactOracle::new(stream, d, k)
}
