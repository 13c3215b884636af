//! Sequence indexing: lexicographic positions in 𝒳ⁿ and ranks inside a
//! type class.

use crate::error::{Error, Result};
use crate::source::TypeVector;
use num_bigint::BigUint;
use num_traits::One;

/// Largest sequence space the exhaustive decoders will walk.
pub const MAX_SCAN: u64 = 1 << 24;

/// |𝒳|ⁿ if it fits the scan budget.
pub fn scan_size(k: usize, n: usize) -> Result<u64> {
    let needed = (k as f64).powi(n as i32);
    if needed > MAX_SCAN as f64 {
        return Err(Error::BudgetExceeded {
            needed,
            budget: MAX_SCAN,
        });
    }
    Ok((k as u64).pow(n as u32))
}

/// Position of `x` in lexicographic order (first symbol most significant).
pub fn seq_index(x: &[usize], k: usize) -> u64 {
    x.iter().fold(0u64, |acc, &a| acc * k as u64 + a as u64)
}

pub fn seq_from_index(mut idx: u64, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
    out
}

/// Checks length and alphabet of a sequence.
pub fn check_sequence(x: &[usize], n: usize, k: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if let Some(&a) = x.iter().find(|&&a| a >= k) {
        return Err(Error::SymbolOutOfRange { symbol: a, size: k });
    }
    Ok(())
}

/// Rank of `x` among the sequences of its own type, lexicographic.
pub fn rank_in_type(x: &[usize], k: usize) -> BigUint {
    let mut counts = vec![0u64; k];
    for &a in x {
        counts[a] += 1;
    }
    let mut remaining = x.len() as u64;
    // number of completions of the current prefix
    let mut completions = crate::composition::multinomial(&counts);
    let mut rank = BigUint::ZERO;
    for &a in x {
        for &c in counts.iter().take(a) {
            if c > 0 {
                rank += &completions * c / remaining;
            }
        }
        completions = completions * counts[a] / remaining;
        counts[a] -= 1;
        remaining -= 1;
    }
    debug_assert!(completions.is_one() || x.is_empty());
    rank
}

/// Sequence of type `t` with the given rank.
pub fn unrank_in_type(t: &TypeVector, rank: &BigUint) -> Result<Vec<usize>> {
    let mut counts = t.counts().to_vec();
    let mut remaining = t.n();
    let mut completions = crate::composition::multinomial(&counts);
    if *rank >= completions {
        return Err(Error::MalformedCodeword(format!(
            "rank {rank} outside a type class of size {completions}"
        )));
    }
    let mut rank = rank.clone();
    let mut out = Vec::with_capacity(remaining as usize);
    while remaining > 0 {
        for a in 0..counts.len() {
            if counts[a] == 0 {
                continue;
            }
            let sub = &completions * counts[a] / remaining;
            if rank < sub {
                out.push(a);
                completions = sub;
                counts[a] -= 1;
                break;
            }
            rank -= sub;
        }
        remaining -= 1;
    }
    Ok(out)
}
