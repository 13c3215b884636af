//! Seeded binning hash.
//!
//! A sequence is absorbed symbol by symbol with
//! `h ← mix(h ⊕ (symbol + 1) ⊕ mix(position))`, starting from the seed; the
//! bin is `h mod M`. When M needs more than 64 bits the hash is stretched
//! into extra words with `mix(h ⊕ mix(j))`, j = 1, 2, …, and the resulting
//! integer (one word longer than M) is reduced mod M.

use crate::rng::mix;
use num_bigint::BigUint;
use num_traits::{FromPrimitive, ToPrimitive};
use std::f64::consts::LN_2;

/// 64-bit absorption hash of `x` under `seed`.
pub fn prf_hash(seed: u64, x: &[usize]) -> u64 {
    let mut h = seed;
    for (pos, &sym) in x.iter().enumerate() {
        h = mix(h ^ (sym as u64 + 1) ^ mix(pos as u64));
    }
    h
}

/// Reduces a hash into `0..bins`.
pub fn bin_from_hash(h: u64, bins: &BigUint) -> BigUint {
    if let Some(m) = bins.to_u64() {
        return BigUint::from(h % m);
    }
    let words = bins.bits().div_ceil(64) as usize + 1;
    let mut digits = Vec::with_capacity(words);
    digits.push(h);
    for j in 1..words {
        digits.push(mix(h ^ mix(j as u64)));
    }
    let wide = BigUint::from_slice(
        &digits
            .iter()
            .flat_map(|d| [*d as u32, (*d >> 32) as u32])
            .collect::<Vec<_>>(),
    );
    wide % bins
}

pub fn bin_index(seed: u64, x: &[usize], bins: &BigUint) -> BigUint {
    bin_from_hash(prf_hash(seed, x), bins)
}

/// ⌈e^a⌉ for a ≥ 0. Past f64 range the value keeps 53 significant bits.
pub fn ceil_exp(a: f64) -> BigUint {
    assert!(
        a.is_finite() && a >= 0.0,
        "ceil_exp needs a finite nonnegative exponent, got {a}"
    );
    if a < 700.0 {
        return BigUint::from_f64(a.exp().ceil()).expect("finite");
    }
    let bits = a / LN_2;
    let k = bits.floor();
    let mant = (bits - k).exp2();
    let head = (mant * 2f64.powi(52)).ceil() as u64;
    BigUint::from(head) << (k as u64 - 52)
}

/// ⌈log₂ count⌉: the fixed field width that can hold any value below `count`.
pub fn field_width(count: &BigUint) -> u64 {
    if *count <= BigUint::from(1u32) {
        0
    } else {
        (count - 1u32).bits()
    }
}

/// Lowest 64 bits of a bin index.
pub(crate) fn low_word(v: &BigUint) -> u64 {
    v.iter_u64_digits().next().unwrap_or(0)
}
