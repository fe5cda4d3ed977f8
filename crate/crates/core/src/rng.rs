//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed. Graph sampling
//! assigns dyad number `k` (pairs `i < j` in lexicographic order) the `k`-th
//! 64-bit word of the stream, so any row can be generated independently by
//! seeking; the output does not depend on how rows are split across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A fresh generator for `seed`.
pub fn generator(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `(cell, rep)` under `master`.
///
/// Each coordinate is folded in through one splitmix64 round, so neighbouring
/// indices produce unrelated seeds.
pub fn derive_seed(master: u64, cell: u64, rep: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ cell.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ rep.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Index of dyad `(i, i + 1)` in the lexicographic order of pairs `i < j`.
pub(crate) fn row_start(n: usize, i: usize) -> u128 {
    let (n, i) = (n as u128, i as u128);
    i * n - i * (i + 1) / 2
}

/// Uniform draws for the dyads of one row, positioned by [`row_start`].
pub(crate) struct DyadStream {
    rng: ChaCha8Rng,
}

impl DyadStream {
    pub(crate) fn for_row(base: &ChaCha8Rng, n: usize, i: usize) -> Self {
        let mut rng = base.clone();
        // Word positions count 32-bit words; each dyad consumes two.
        rng.set_word_pos(2 * row_start(n, i));
        DyadStream { rng }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub(crate) fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_resume_the_global_stream() {
        let base = generator(7);
        let n = 6;
        let mut whole = base.clone();
        let mut expected = Vec::new();
        for _ in 0..n * (n - 1) / 2 {
            expected.push((whole.next_u64() >> 11) as f64 / (1u64 << 53) as f64);
        }
        let mut got = Vec::new();
        for i in 0..n {
            let mut s = DyadStream::for_row(&base, n, i);
            for _ in i + 1..n {
                got.push(s.next_unit());
            }
        }
        assert_eq!(expected, got);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..50)
            .flat_map(|c| (0..50).map(move |r| derive_seed(1, c, r)))
            .collect();
        assert_eq!(s.len(), 2500);
        assert_eq!(derive_seed(3, 4, 5), derive_seed(3, 4, 5));
    }
}
