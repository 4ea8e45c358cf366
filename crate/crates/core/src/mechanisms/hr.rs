//! Hadamard response over a Sylvester matrix of order `K = 2^ceil(log2(d+1))`.
//!
//! Item `v` uses row `v + 1`; row 0 (all ones) never carries an item. The
//! matrix is never materialized: `H[i][j] = +1` iff `popcount(i & j)` is even.

use rand::Rng;

use crate::domain::{Item, PrivacyLevel};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrParams {
    pub level: PrivacyLevel,
    /// Matrix order `K`.
    pub order: u32,
    pub p: f64,
    pub q: f64,
}

impl HrParams {
    pub fn new(level: PrivacyLevel, domain_size: usize) -> Result<Self> {
        if domain_size < 2 {
            return Err(invalid(format!("HR domain size must be >= 2, got {domain_size}")));
        }
        let order = (domain_size as u64 + 1).next_power_of_two();
        if order > u32::MAX as u64 {
            return Err(invalid("HR matrix order exceeds 32 bits"));
        }
        let (p, q) = match level {
            PrivacyLevel::Epsilon(eps) => {
                if !eps.is_finite() || eps <= 0.0 {
                    return Err(invalid(format!("epsilon must be finite and > 0, got {eps}")));
                }
                let e = eps.exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            }
            PrivacyLevel::Noiseless => (1.0, 0.0),
        };
        Ok(Self {
            level,
            order: order as u32,
            p,
            q,
        })
    }

    /// `2 / (p - q)`, which equals `2(e^eps + 1)/(e^eps - 1)`.
    pub fn scale(&self) -> Result<f64> {
        let gap = self.p - self.q;
        if gap == 0.0 || !gap.is_finite() {
            return Err(Error::Degenerate("HR p equals q"));
        }
        Ok(2.0 / gap)
    }

    /// `2(e^eps+1)/(e^eps-1) * (c - n/2)`.
    pub fn debias(&self, matching: f64, n: f64) -> Result<f64> {
        Ok(self.scale()? * (matching - n / 2.0))
    }

    /// Probability of column `col` for item `v`.
    pub fn prob(&self, v: Item, col: u32) -> f64 {
        let half = self.order as f64 / 2.0;
        if hadamard_sign(v + 1, col) {
            self.p / half
        } else {
            self.q / half
        }
    }
}

/// `true` for `+1`.
#[inline]
pub fn hadamard_sign(row: u32, col: u32) -> bool {
    (row & col).count_ones().is_multiple_of(2)
}

/// Draws a column whose sign in row `v + 1` is `+1` with probability `p`.
/// Columns of the chosen sign are sampled uniformly by rejection; every row
/// other than 0 is balanced, so each attempt succeeds with probability 1/2.
pub fn hr_randomize<R: Rng + ?Sized>(v: Item, params: &HrParams, rng: &mut R) -> u32 {
    let row = v + 1;
    let want = params.p >= 1.0 || rng.random::<f64>() < params.p;
    loop {
        let col = rng.random_range(0..params.order);
        if hadamard_sign(row, col) == want {
            return col;
        }
    }
}

/// Column histogram of length `K`; estimates are formed on demand.
#[derive(Debug, Clone)]
pub struct HrAggregator {
    params: HrParams,
    domain_size: usize,
    columns: Vec<u64>,
    n: u64,
}

impl HrAggregator {
    pub fn new(params: HrParams, domain_size: usize) -> Self {
        Self {
            columns: vec![0; params.order as usize],
            params,
            domain_size,
            n: 0,
        }
    }

    pub fn params(&self) -> &HrParams {
        &self.params
    }

    pub fn add(&mut self, col: u32) -> Result<()> {
        let slot = self
            .columns
            .get_mut(col as usize)
            .ok_or_else(|| invalid(format!("HR column {col} outside 0..{}", self.params.order)))?;
        *slot += 1;
        self.n += 1;
        Ok(())
    }

    pub fn reports(&self) -> u64 {
        self.n
    }

    /// Reports whose column has `+1` in row `v + 1`.
    pub fn matching(&self, v: Item) -> u64 {
        self.columns
            .iter()
            .enumerate()
            .filter(|&(j, _)| hadamard_sign(v + 1, j as u32))
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn estimates(&self) -> Result<Vec<f64>> {
        let n = self.n as f64;
        (0..self.domain_size as Item)
            .map(|v| self.params.debias(self.matching(v) as f64, n))
            .collect()
    }
}
