//! Optimal local hashing: hash the value into `g` buckets with a fresh
//! per-report seed, then apply GRR over the buckets.

use rand::Rng;

use crate::domain::{GrrParams, Item, PrivacyLevel};
use crate::error::{invalid, Error, Result};
use crate::hash::hash_to_range;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlhParams {
    pub level: PrivacyLevel,
    pub g: u32,
    /// GRR over the `g` buckets.
    pub bucket: GrrParams,
}

impl OlhParams {
    /// `g = max(2, round(e^eps + 1))`; noiseless mode uses `g = 2`.
    pub fn new(level: PrivacyLevel) -> Result<Self> {
        let g = match level {
            PrivacyLevel::Epsilon(eps) => optimal_g(eps)?,
            PrivacyLevel::Noiseless => 2,
        };
        Self::with_g(level, g)
    }

    pub fn with_g(level: PrivacyLevel, g: u32) -> Result<Self> {
        if g < 2 {
            return Err(invalid(format!("OLH needs g >= 2, got {g}")));
        }
        let bucket = match level {
            PrivacyLevel::Epsilon(eps) => GrrParams::new(eps, g as usize)?,
            PrivacyLevel::Noiseless => GrrParams::noiseless(g as usize),
        };
        Ok(Self { level, g, bucket })
    }

    /// `p' - 1/g`, the support-count debias denominator.
    pub fn gap(&self) -> Result<f64> {
        let gap = self.bucket.p - 1.0 / self.g as f64;
        if gap.abs() < f64::EPSILON || !gap.is_finite() {
            return Err(Error::Degenerate("OLH p' equals 1/g"));
        }
        Ok(gap)
    }

    pub fn debias(&self, support: f64, n: f64) -> Result<f64> {
        Ok((support - n / self.g as f64) / self.gap()?)
    }
}

pub fn optimal_g(epsilon: f64) -> Result<u32> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(invalid(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    let g = (epsilon.exp() + 1.0).round();
    if g > u32::MAX as f64 {
        return Err(invalid(format!("epsilon {epsilon} gives an unrepresentable g")));
    }
    Ok((g as u32).max(2))
}

/// Returns `(seed, perturbed bucket)`.
pub fn olh_randomize<R: Rng + ?Sized>(v: Item, params: &OlhParams, rng: &mut R) -> (u32, u32) {
    let seed: u32 = rng.random();
    let h = hash_to_range(seed as u64, v, params.g);
    (seed, params.bucket.sample(h as usize, rng) as u32)
}

/// Per-item support counters. Each report is decoded by a full scan over the
/// domain, so aggregation costs Θ(d) per report and Θ(d) memory.
#[derive(Debug, Clone)]
pub struct OlhAggregator {
    params: OlhParams,
    support: Vec<u64>,
    n: u64,
}

impl OlhAggregator {
    pub fn new(params: OlhParams, domain_size: usize) -> Self {
        Self {
            params,
            support: vec![0; domain_size],
            n: 0,
        }
    }

    pub fn params(&self) -> &OlhParams {
        &self.params
    }

    pub fn add(&mut self, seed: u32, y: u32) -> Result<()> {
        if y >= self.params.g {
            return Err(invalid(format!("OLH bucket {y} outside 0..{}", self.params.g)));
        }
        let g = self.params.g;
        for (item, s) in self.support.iter_mut().enumerate() {
            if hash_to_range(seed as u64, item as Item, g) == y {
                *s += 1;
            }
        }
        self.n += 1;
        Ok(())
    }

    pub fn reports(&self) -> u64 {
        self.n
    }

    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn estimates(&self) -> Result<Vec<f64>> {
        let n = self.n as f64;
        self.support
            .iter()
            .map(|&s| self.params.debias(s as f64, n))
            .collect()
    }
}
