//! Shared domain types: item domains, privacy budgets and randomized-response
//! probability bundles.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Item identifier. Items are addressed as `0..d`.
pub type Item = u32;

/// The data domain `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ItemDomain {
    size: u32,
}

impl ItemDomain {
    pub fn new(size: u32) -> Result<Self> {
        if size < 2 {
            return Err(invalid(format!("domain size must be >= 2, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn size(self) -> u32 {
        self.size
    }

    pub fn contains(self, item: Item) -> bool {
        item < self.size
    }

    /// Checks that a heavy part of `k` slots is strictly smaller than the domain.
    pub fn check_capacity(self, k: usize) -> Result<()> {
        if k == 0 || k as u64 >= self.size as u64 {
            return Err(invalid(format!(
                "k must satisfy 0 < k < d (k = {k}, d = {})",
                self.size
            )));
        }
        Ok(())
    }
}

/// Whether randomizers perturb at all. `Noiseless` gives `p = 1, q = 0`
/// everywhere and is used for differential tests against the plain structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacyLevel {
    Epsilon(f64),
    Noiseless,
}

impl PrivacyLevel {
    pub fn epsilon(self) -> Option<f64> {
        match self {
            PrivacyLevel::Epsilon(e) => Some(e),
            PrivacyLevel::Noiseless => None,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(invalid(format!(
            "epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    Ok(())
}

/// A per-event privacy budget in nats, optionally divided into a judge part
/// (`epsilon1`) and a value part (`epsilon2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    split: Option<(f64, f64)>,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            split: None,
        })
    }

    /// Splits `epsilon` so that `epsilon1 / epsilon2 = ratio`. `epsilon2` is
    /// computed as the remainder, so the parts sum back to `epsilon`.
    pub fn with_ratio(epsilon: f64, ratio: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !ratio.is_finite() || ratio <= 0.0 {
            return Err(invalid(format!("split ratio must be > 0, got {ratio}")));
        }
        let eps1 = epsilon * ratio / (1.0 + ratio);
        let eps2 = epsilon - eps1;
        Self::with_split(eps1, eps2)
    }

    pub fn with_split(epsilon1: f64, epsilon2: f64) -> Result<Self> {
        check_epsilon(epsilon1)?;
        check_epsilon(epsilon2)?;
        Ok(Self {
            epsilon: epsilon1 + epsilon2,
            split: Some((epsilon1, epsilon2)),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn split(&self) -> Option<(f64, f64)> {
        self.split
    }
}

/// Generalized randomized response over `domain_size` symbols: keep the true
/// symbol with probability `p`, otherwise report each other symbol with
/// probability `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrrParams {
    pub p: f64,
    pub q: f64,
    pub domain_size: usize,
}

/// `p = e^eps / (e^eps + d - 1)`, `q = 1 / (e^eps + d - 1)`.
pub fn grr_params(epsilon: f64, domain_size: usize) -> Result<GrrParams> {
    GrrParams::new(epsilon, domain_size)
}

impl GrrParams {
    pub fn new(epsilon: f64, domain_size: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if domain_size < 2 {
            return Err(invalid(format!(
                "GRR domain size must be >= 2, got {domain_size}"
            )));
        }
        Ok(Self::unchecked(epsilon, domain_size))
    }

    fn unchecked(epsilon: f64, domain_size: usize) -> Self {
        let e = epsilon.exp();
        let denom = e + domain_size as f64 - 1.0;
        Self {
            p: e / denom,
            q: 1.0 / denom,
            domain_size,
        }
    }

    pub fn noiseless(domain_size: usize) -> Self {
        Self {
            p: 1.0,
            q: 0.0,
            domain_size,
        }
    }

    /// Parameters for a sub-domain that may shrink to a single symbol (hot or
    /// cold sets). A one-symbol domain always reports that symbol.
    pub fn for_level(level: PrivacyLevel, domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(invalid("GRR over an empty domain"));
        }
        match level {
            PrivacyLevel::Noiseless => Ok(Self::noiseless(domain_size)),
            PrivacyLevel::Epsilon(_) if domain_size == 1 => Ok(Self::noiseless(1)),
            PrivacyLevel::Epsilon(eps) => Self::new(eps, domain_size),
        }
    }

    /// `p - q`, rejecting the degenerate case.
    pub fn gap(&self) -> Result<f64> {
        let gap = self.p - self.q;
        if gap == 0.0 || !gap.is_finite() {
            return Err(Error::Degenerate("GRR p equals q"));
        }
        Ok(gap)
    }

    /// Randomizes the symbol index `v` in `0..domain_size`.
    pub fn sample<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> usize {
        debug_assert!(v < self.domain_size);
        if self.domain_size == 1 || rng.random::<f64>() < self.p {
            return v;
        }
        let other = rng.random_range(0..self.domain_size - 1);
        if other >= v {
            other + 1
        } else {
            other
        }
    }

    /// Probability of reporting `output` given input `input`.
    pub fn prob(&self, input: usize, output: usize) -> f64 {
        if input == output {
            self.p
        } else {
            self.q
        }
    }
}
