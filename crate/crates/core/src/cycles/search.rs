use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::{CancellationPair, CycleMonomial, CyclePattern};
use crate::error::{LcrError, Result};
use crate::graph::EdgeCode;

pub const MIN_SEARCH_LENGTH: usize = 3;
pub const MAX_SEARCH_LENGTH: usize = 8;

/// One isomorphism class of cancellation pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClass {
    /// 1-based, in order of the canonical representative.
    pub id: usize,
    /// Lexicographically smallest member under the symmetry group.
    pub pair: CancellationPair,
    /// Number of raw `(a, b)` pairs in the class.
    pub members: usize,
}

/// The images of a pair under rotations and reversal, applied to both
/// patterns together.
fn orbit(a: &CyclePattern, b: &CyclePattern) -> impl Iterator<Item = (CyclePattern, CyclePattern)> {
    let m = a.len();
    let (ra, rb) = (a.reversed(), b.reversed());
    let a = a.clone();
    let b = b.clone();
    (0..m).flat_map(move |r| {
        [
            (a.rotated(r), b.rotated(r)),
            (ra.rotated(r), rb.rotated(r)),
        ]
    })
}

/// Canonical form of a pair: the smallest image in its orbit.
pub fn canonical_pair(pair: &CancellationPair) -> CancellationPair {
    let (a, b) = orbit(&pair.a, &pair.b)
        .min()
        .expect("orbit is never empty");
    CancellationPair { a, b, c0: pair.c0 }
}

/// Every cancellation pair of length `m`, grouped into isomorphism classes.
///
/// Two pairs are identified when one is obtained from the other by starting
/// the tour elsewhere or walking it backwards, with the same move applied to
/// both patterns.
pub fn pair_search(m: usize) -> Result<Vec<PairClass>> {
    if m < MIN_SEARCH_LENGTH {
        return Err(LcrError::domain(format!("cycle length must be at least {MIN_SEARCH_LENGTH}, got {m}")));
    }
    if m > MAX_SEARCH_LENGTH {
        return Err(LcrError::capacity(format!(
            "cycle length {m} exceeds the search limit {MAX_SEARCH_LENGTH}"
        )));
    }
    let total = 4usize.pow(m as u32);
    let monomials: Vec<CycleMonomial> = (0..total)
        .into_par_iter()
        .map(|idx| CyclePattern::from_index(m, idx).monomial())
        .collect();

    // Patterns with equal mu/nu exponents; pairs only form inside a group.
    let mut groups: HashMap<(&[u32], &[u32]), Vec<usize>> = HashMap::new();
    for (idx, mono) in monomials.iter().enumerate() {
        groups
            .entry((&mono.mu_exp, &mono.nu_exp))
            .or_default()
            .push(idx);
    }

    let mut classes: BTreeMap<(CyclePattern, CyclePattern), (u32, usize)> = BTreeMap::new();
    for members in groups.values() {
        for &ia in members {
            for &ib in members {
                let (ra, rb) = (monomials[ia].rho_power, monomials[ib].rho_power);
                if ra <= rb {
                    continue;
                }
                let pair = CancellationPair {
                    a: CyclePattern::from_index(m, ia),
                    b: CyclePattern::from_index(m, ib),
                    c0: ra - rb,
                };
                let canon = canonical_pair(&pair);
                classes.entry((canon.a, canon.b)).or_insert((canon.c0, 0)).1 += 1;
            }
        }
    }

    Ok(classes
        .into_iter()
        .enumerate()
        .map(|(k, ((a, b), (c0, members)))| PairClass {
            id: k + 1,
            pair: CancellationPair { a, b, c0 },
            members,
        })
        .collect())
}

/// The explicit construction for even `m = 2N`: numerator codes
/// `1x_1, y_1 0, 1x_2, y_2 0, ...`, denominator codes
/// `0x_1, y_1 1, 0x_2, y_2 1, ...`, kept when `Σx − Σy > 0`.
pub fn constructive_family(m: usize) -> Result<Vec<CancellationPair>> {
    if m < 4 || m % 2 == 1 {
        return Err(LcrError::domain(format!("the construction needs an even length ≥ 4, got {m}")));
    }
    let half = m / 2;
    let mut out = Vec::new();
    for bits in 0..(1usize << m) {
        let bit = |k: usize| bits >> k & 1 == 1;
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        let mut c0 = 0i64;
        for t in 0..half {
            let (x, y) = (bit(2 * t), bit(2 * t + 1));
            c0 += i64::from(x) - i64::from(y);
            a.push(EdgeCode::from_bits(true, x));
            a.push(EdgeCode::from_bits(y, false));
            b.push(EdgeCode::from_bits(false, x));
            b.push(EdgeCode::from_bits(y, true));
        }
        if c0 > 0 {
            out.push(CancellationPair {
                a: CyclePattern::new(a)?,
                b: CyclePattern::new(b)?,
                c0: c0 as u32,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::is_cancellation_pair;

    #[test]
    fn odd_lengths_have_no_pairs() {
        for m in [3, 5, 7] {
            assert!(pair_search(m).unwrap().is_empty(), "m = {m}");
        }
    }

    #[test]
    fn quadrilaterals_form_three_classes() {
        let classes = pair_search(4).unwrap();
        assert_eq!(classes.len(), 3);
        let mut c0: Vec<u32> = classes.iter().map(|c| c.pair.c0).collect();
        c0.sort();
        assert_eq!(c0, vec![1, 1, 2]);
        assert_eq!(classes.iter().map(|c| c.members).sum::<usize>(), 20);
        for built_in in CancellationPair::quadrilaterals() {
            let canon = canonical_pair(&built_in);
            assert!(classes.iter().any(|c| c.pair == canon), "{canon:?}");
        }
    }

    #[test]
    fn construction_yields_valid_pairs() {
        for p in constructive_family(6).unwrap() {
            assert_eq!(is_cancellation_pair(&p.a, &p.b), Some(p.c0));
        }
        assert!(constructive_family(5).is_err());
    }

    #[test]
    fn range_is_enforced() {
        assert!(pair_search(2).is_err());
        assert!(pair_search(9).is_err());
    }
}
