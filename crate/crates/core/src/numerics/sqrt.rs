//! Single-precision square root modelled as a digit-recurrence unit.
//!
//! The significand is square-rooted with a restoring integer algorithm
//! (one result bit per step, as a shift/subtract datapath would) and the
//! result is rounded to nearest using a round bit and a sticky remainder.

use super::NumericsError;

const MANT_BITS: u32 = 23;
const EXP_BIAS: i32 = 127;

/// Correctly rounded `sqrt` for binary32 values.
///
/// `-0.0` returns `-0.0`, `+inf` returns `+inf`, NaN propagates. Any other
/// negative input is rejected.
pub fn sqrt32(x: f32) -> Result<f32, NumericsError> {
    if x.is_nan() || x == 0.0 || x == f32::INFINITY {
        return Ok(x);
    }
    if x < 0.0 {
        return Err(NumericsError::NegativeRadicand(x));
    }

    let bits = x.to_bits();
    let biased = ((bits >> MANT_BITS) & 0xff) as i32;
    let frac = bits & ((1 << MANT_BITS) - 1);

    // Normalize to significand m in [2^23, 2^24) with x = m * 2^(exp - 23).
    let (mut mant, mut exp) = if biased == 0 {
        let shift = frac.leading_zeros() - (31 - MANT_BITS);
        (frac << shift, 1 - EXP_BIAS - shift as i32)
    } else {
        (frac | (1 << MANT_BITS), biased - EXP_BIAS)
    };
    // Make the exponent even so it halves cleanly.
    if exp & 1 != 0 {
        mant <<= 1;
        exp -= 1;
    }

    // radicand holds m * 2^25 (48 fractional bits after the implicit point),
    // so its root carries 24 fractional bits: 23 kept plus one round bit.
    let radicand = (mant as u64) << (MANT_BITS + 2);
    let (root, remainder) = isqrt_restoring(radicand);

    let round_bit = root & 1;
    let sticky = remainder != 0;
    let mut sig = root >> 1;
    if round_bit == 1 && (sticky || sig & 1 == 1) {
        sig += 1;
    }
    // sqrt of [1, 4) stays below 2, so rounding cannot carry out.
    debug_assert!(sig < (1 << (MANT_BITS + 1)));

    let out_exp = (exp / 2 + EXP_BIAS) as u32;
    let out = (out_exp << MANT_BITS) | (sig as u32 & ((1 << MANT_BITS) - 1));
    Ok(f32::from_bits(out))
}

/// Bitwise restoring square root: returns `(floor(sqrt(n)), n - root^2)`.
fn isqrt_restoring(n: u64) -> (u64, u64) {
    let mut rem = n;
    let mut root = 0u64;
    let mut bit = 1u64 << 62;
    while bit > n {
        bit >>= 2;
    }
    while bit != 0 {
        if rem >= root + bit {
            rem -= root + bit;
            root = (root >> 1) + bit;
        } else {
            root >>= 1;
        }
        bit >>= 2;
    }
    (root, rem)
}
