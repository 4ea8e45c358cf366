use rand::Rng;

use crate::domain::{GrrParams, Item};
use crate::error::{invalid, Result};

/// Client side of GRR over the item domain `0..params.domain_size`.
pub fn grr_randomize<R: Rng + ?Sized>(v: Item, params: &GrrParams, rng: &mut R) -> Item {
    params.sample(v as usize, rng) as Item
}

/// `(c - n q) / (p - q)`.
pub fn grr_debias(count: f64, n: f64, params: &GrrParams) -> Result<f64> {
    Ok((count - n * params.q) / params.gap()?)
}

/// Per-item report histogram; Θ(d) memory.
#[derive(Debug, Clone)]
pub struct GrrAggregator {
    params: GrrParams,
    counts: Vec<u64>,
    n: u64,
}

impl GrrAggregator {
    pub fn new(params: GrrParams) -> Self {
        Self {
            counts: vec![0; params.domain_size],
            params,
            n: 0,
        }
    }

    pub fn params(&self) -> &GrrParams {
        &self.params
    }

    pub fn add(&mut self, report: Item) -> Result<()> {
        let slot = self
            .counts
            .get_mut(report as usize)
            .ok_or_else(|| invalid(format!("report {report} outside the domain")))?;
        *slot += 1;
        self.n += 1;
        Ok(())
    }

    pub fn reports(&self) -> u64 {
        self.n
    }

    pub fn raw_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn estimates(&self) -> Result<Vec<f64>> {
        let gap = self.params.gap()?;
        let offset = self.n as f64 * self.params.q;
        Ok(self
            .counts
            .iter()
            .map(|&c| (c as f64 - offset) / gap)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    #[test]
    fn noiseless_identity() {
        let mut agg = GrrAggregator::new(GrrParams::noiseless(5));
        for v in [0, 1, 1, 4] {
            agg.add(v).unwrap();
        }
        assert_eq!(agg.estimates().unwrap(), vec![1.0, 2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn debias_root() {
        let params = GrrParams::new(1.0, 10).unwrap();
        let n = 1000.0;
        assert!(grr_debias(n * params.q, n, &params).unwrap().abs() < 1e-9);
    }

    #[test]
    fn estimates_sum_to_n() {
        let params = GrrParams::new(0.7, 50).unwrap();
        let mut agg = GrrAggregator::new(params);
        let mut rng = RngHandle::new(5);
        for i in 0..20_000u32 {
            agg.add(grr_randomize(i % 7, &params, &mut rng)).unwrap();
        }
        let sum: f64 = agg.estimates().unwrap().iter().sum();
        assert!((sum - 20_000.0).abs() < 1e-6 * 20_000.0);
    }

    #[test]
    fn out_of_domain_report() {
        let mut agg = GrrAggregator::new(GrrParams::noiseless(3));
        assert!(agg.add(3).is_err());
    }

    #[test]
    fn high_epsilon_keeps() {
        let params = GrrParams::new(60.0, 10).unwrap();
        let mut rng = RngHandle::new(1);
        assert!((0..1000).all(|_| grr_randomize(3, &params, &mut rng) == 3));
    }
}
