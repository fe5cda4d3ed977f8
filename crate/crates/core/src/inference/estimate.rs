use serde::{Deserialize, Serialize};

use crate::cycles::{canonical_pair, fast_count_pair, CancellationPair};
use crate::error::Result;
use crate::graph::DirectedGraph;

/// `H(x; t)`: `x` when `|x| ≤ t`, otherwise `sign(x)·t`.
pub fn hard_threshold(x: f64, t: f64) -> f64 {
    if x.abs() <= t {
        x
    } else {
        t.copysign(x)
    }
}

/// The clamp `2 ln n` applied to the log ratio; zero below two nodes.
pub fn threshold_for(n: usize) -> f64 {
    2.0 * (n.max(1) as f64).ln()
}

/// Whether both counts were usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStatus {
    Ok,
    /// `Q(a) = 0`: the estimate sits at `−threshold`.
    NumeratorZero,
    /// `Q(b) = 0`: the estimate sits at `+threshold`.
    DenominatorZero,
    /// Both counts vanish; nothing is estimated.
    BothZero,
}

/// Log ratio of the two counts of a cancellation pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcrResult {
    pub n: usize,
    pub qa: u64,
    pub qb: u64,
    /// `(ln Q(a) − ln Q(b)) / c0`; absent unless both counts are positive.
    pub rho_hat: Option<f64>,
    /// `rho_hat` clamped to `±threshold`, or the saturated endpoint.
    pub rho_star: Option<f64>,
    pub threshold: f64,
    /// Built-in quadrilateral number, when the pair is one of them.
    pub pair_id: Option<usize>,
    pub pair: CancellationPair,
    pub c0: u32,
    pub status: CountStatus,
}

impl LcrResult {
    /// Builds the estimate from precomputed counts.
    pub fn from_counts(n: usize, qa: u64, qb: u64, pair: &CancellationPair) -> Self {
        let threshold = threshold_for(n);
        let (rho_hat, rho_star, status) = match (qa, qb) {
            (0, 0) => (None, None, CountStatus::BothZero),
            (0, _) => (None, Some(-threshold), CountStatus::NumeratorZero),
            (_, 0) => (None, Some(threshold), CountStatus::DenominatorZero),
            _ => {
                let r = ((qa as f64).ln() - (qb as f64).ln()) / pair.c0 as f64;
                (Some(r), Some(hard_threshold(r, threshold)), CountStatus::Ok)
            }
        };
        LcrResult {
            n,
            qa,
            qb,
            rho_hat,
            rho_star,
            threshold,
            pair_id: builtin_id(pair),
            pair: pair.clone(),
            c0: pair.c0,
            status,
        }
    }

    /// `Q(a) − e^{c0·ρ} Q(b)`, the centered statistic at `ρ`.
    pub fn u_statistic(&self, rho: f64) -> f64 {
        self.qa as f64 - (self.c0 as f64 * rho).exp() * self.qb as f64
    }
}

fn builtin_id(pair: &CancellationPair) -> Option<usize> {
    CancellationPair::quadrilaterals()
        .iter()
        .position(|p| p == pair)
        .or_else(|| {
            let canon = canonical_pair(pair);
            CancellationPair::quadrilaterals()
                .iter()
                .position(|p| canonical_pair(p) == canon)
        })
        .map(|k| k + 1)
}

/// Counts both patterns of `pair` and forms the log ratio.
pub fn estimate(g: &DirectedGraph, pair: &CancellationPair) -> Result<LcrResult> {
    let (qa, qb) = fast_count_pair(g, pair)?;
    Ok(LcrResult::from_counts(g.n(), qa, qb, pair))
}
