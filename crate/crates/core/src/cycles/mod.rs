//! Generalized cycles: edge-type patterns along a closed tour of distinct
//! nodes, their weight monomials, cancellation pairs, and counts.
//!
//! Counts are raw sums over ordered tuples of distinct nodes. A cycle that
//! matches a pattern from several starting points is counted that many times;
//! no symmetry constant is divided out anywhere in the crate.

mod count;
mod fast;
mod pattern;
mod search;

pub use count::{brute_force_count, expected_count, BRUTE_FORCE_MAX_TOURS, EXPECTED_COUNT_MAX_TOURS};
#[doc(hidden)]
pub use fast::{fast_count_with_fault, Fault};
pub use fast::{fast_count, fast_count_pair};
pub use pattern::{is_cancellation_pair, CancellationPair, CycleMonomial, CyclePattern};
pub use search::{canonical_pair, constructive_family, pair_search, PairClass, MAX_SEARCH_LENGTH, MIN_SEARCH_LENGTH};
