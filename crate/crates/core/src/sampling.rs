//! Exact Bernoulli(exp(-gamma)) sampling.
//!
//! Comparing a uniform float against `exp(-gamma)` inherits the rounding of
//! both the float grid and `exp`. Instead `gamma` (an `f64`, hence a dyadic
//! rational) is decomposed into an integer part and a fraction `n / 2^s`, and
//! each piece is sampled with integer-only Bernoulli trials following the
//! alternating-series construction of Canonne, Kamath and Steinke (2020):
//! `Bernoulli(exp(-x))` for `x in [0, 1]` returns whether the first failing
//! index of `Bernoulli(x / k)` trials, `k = 1, 2, ...`, is odd.

use rand::Rng;

use crate::error::{invalid, Result};

/// Largest denominator exponent used for the fractional part. Bits of the
/// fraction below `2^-MAX_SHIFT` are truncated.
const MAX_SHIFT: u32 = 64;

/// Returns `true` with probability `exp(-gamma)`.
pub fn bernoulli_exp_neg<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> Result<bool> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(invalid(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    Ok(sample_exp_neg(gamma, rng))
}

/// Same as [`bernoulli_exp_neg`] for a pre-validated `gamma`; non-positive
/// values are treated as zero.
pub(crate) fn sample_exp_neg<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> bool {
    if gamma.is_nan() || gamma <= 0.0 {
        return true;
    }
    let whole = gamma.floor();
    let frac = gamma - whole;
    // exp(-gamma) = exp(-1)^floor(gamma) * exp(-frac)
    let mut remaining = whole;
    while remaining >= 1.0 {
        if !bernoulli_exp_neg_fraction(1, 1, rng) {
            return false;
        }
        remaining -= 1.0;
    }
    if frac == 0.0 {
        return true;
    }
    let (num, den) = dyadic_fraction(frac);
    bernoulli_exp_neg_fraction(num, den, rng)
}

/// Exact `n / 2^s` representation of `x in (0, 1)`, truncated to
/// `MAX_SHIFT` fractional bits.
fn dyadic_fraction(x: f64) -> (u128, u128) {
    debug_assert!(x > 0.0 && x < 1.0);
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let (mantissa, exponent) = if exp_bits == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp_bits - 1075)
    };
    // x = mantissa * 2^exponent with exponent < 0
    let shift = (-exponent) as u32;
    if shift <= MAX_SHIFT {
        (mantissa as u128, 1u128 << shift)
    } else {
        let drop = shift - MAX_SHIFT;
        let num = if drop >= 64 { 0 } else { mantissa >> drop };
        (num as u128, 1u128 << MAX_SHIFT)
    }
}

/// Bernoulli(exp(-num/den)) for `num <= den`.
fn bernoulli_exp_neg_fraction<R: Rng + ?Sized>(num: u128, den: u128, rng: &mut R) -> bool {
    debug_assert!(num <= den && den > 0);
    if num == 0 {
        return true;
    }
    let mut k: u128 = 1;
    loop {
        // Bernoulli(num / (den * k))
        let bound = den.saturating_mul(k);
        if rng.random_range(0..bound) < num {
            k += 1;
        } else {
            return k % 2 == 1;
        }
    }
}
