//! Quadrilateral counts in `O(n² + Σ_i d_i²)` time.
//!
//! For a pattern `(c1, c2, c3, c4)` the count over distinct tours is
//! `trace(M1 M2 M3 M4)` minus the tours with `i = k` or `j = l`, where
//! `M_c = A^c` has a zero diagonal. The `00` factor is handled through
//! `A^00 = J − I − U`, with `U` the symmetric any-edge adjacency, so no
//! dense matrix is ever formed.
//!
//! Each row `i` builds `x = e_iᵀ M1 M2` in a dense scratch vector stored as
//! `x[k] + offset`; a `00` row contributes `+1` everywhere through `offset`
//! and is corrected on the `1 + |U(j)|` excluded entries. The second half
//! contracts `x` against `M3` and column `i` of `M4` the same way.

use rayon::prelude::*;

use super::pattern::{CancellationPair, CyclePattern};
use crate::error::{LcrError, Result};
use crate::graph::{DirectedGraph, EdgeCode};

/// Deliberate defects for checking that the oracle comparison is sensitive.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Forget the `−I` part of every `00` factor.
    KeepNullDiagonal,
    /// Skip the removal of tours with repeated nodes.
    KeepRepeatedNodes,
}

/// Entries are bounded by `n` in absolute value.
struct Scratch {
    x: Vec<i32>,
    offset: i64,
}

impl Scratch {
    #[inline]
    fn value(&self, k: usize) -> i64 {
        i64::from(self.x[k]) + self.offset
    }

    /// `Σ_{k ∈ idx} value(k)`.
    #[inline]
    fn gather(&self, idx: &[u32]) -> i64 {
        let x = &self.x[..];
        let s: i64 = idx.iter().map(|&k| i64::from(x[k as usize])).sum();
        s + self.offset * idx.len() as i64
    }
}

struct Kernel<'g> {
    g: &'g DirectedGraph,
    codes: [EdgeCode; 4],
    fault: Fault,
    /// `Σ_j M2_jk`.
    col_sum2: Vec<i32>,
    /// `Σ_l M3_kl`.
    row_sum3: Vec<i64>,
}

impl<'g> Kernel<'g> {
    fn new(g: &'g DirectedGraph, codes: [EdgeCode; 4], fault: Fault) -> Self {
        let n = g.n();
        let col_sum2 = (0..n).map(|k| g.degree(codes[1].transpose(), k) as i32).collect();
        let row_sum3 = (0..n).map(|k| g.degree(codes[2], k) as i64).collect();
        Kernel {
            g,
            codes,
            fault,
            col_sum2,
            row_sum3,
        }
    }

    fn keep_diagonal(&self) -> bool {
        self.fault == Fault::KeepNullDiagonal
    }

    /// `x += sign · row_j(A^c)`.
    #[inline]
    fn add_row(&self, s: &mut Scratch, code: EdgeCode, j: usize, sign: i32) {
        let x = &mut s.x[..];
        if code.is_null() {
            s.offset += i64::from(sign);
            if !self.keep_diagonal() {
                x[j] -= sign;
            }
            for &k in self.g.adjacent(j) {
                x[k as usize] -= sign;
            }
        } else {
            for &k in self.g.neighbors(code, j) {
                x[k as usize] += sign;
            }
        }
    }

    /// `Σ_k x_k A^c_kl`, given `total = Σ_k x_k`.
    #[inline]
    fn column_value(&self, s: &Scratch, code: EdgeCode, l: usize, total: i64) -> i64 {
        if code.is_null() {
            let mut v = total - s.gather(self.g.adjacent(l));
            if !self.keep_diagonal() {
                v -= s.value(l);
            }
            v
        } else {
            s.gather(self.g.neighbors(code.transpose(), l))
        }
    }

    /// `Σ_{j,k,l} M1_ij M2_jk M3_kl M4_li`.
    fn row_trace(&self, s: &mut Scratch, i: usize) -> i64 {
        let [c1, c2, c3, c4] = self.codes;
        if c1.is_null() {
            s.x.copy_from_slice(&self.col_sum2);
            s.offset = 0;
            self.add_row(s, c2, i, -1);
            for &j in self.g.adjacent(i) {
                self.add_row(s, c2, j as usize, -1);
            }
            if self.keep_diagonal() {
                // the −I part of row i was subtracted above; put it back
                self.add_row(s, c2, i, 1);
            }
        } else {
            s.x.fill(0);
            s.offset = 0;
            for &j in self.g.neighbors(c1, i) {
                self.add_row(s, c2, j as usize, 1);
            }
        }
        let total: i64 = s.x.iter().map(|&v| i64::from(v)).sum::<i64>() + s.offset * s.x.len() as i64;

        if c4.is_null() {
            let all: i64 = s
                .x
                .iter()
                .zip(&self.row_sum3)
                .map(|(&x, d)| i64::from(x) * d)
                .sum::<i64>()
                + s.offset * self.row_sum3.iter().sum::<i64>();
            let mut v = all;
            if !self.keep_diagonal() {
                v -= self.column_value(s, c3, i, total);
            }
            for &l in self.g.adjacent(i) {
                v -= self.column_value(s, c3, l as usize, total);
            }
            v
        } else {
            self.g
                .neighbors(c4.transpose(), i)
                .iter()
                .map(|&l| self.column_value(s, c3, l as usize, total))
                .sum()
        }
    }

    fn trace(&self) -> i64 {
        let n = self.g.n();
        (0..n)
            .into_par_iter()
            .map_init(
                || Scratch {
                    x: vec![0; n],
                    offset: 0,
                },
                |s, i| self.row_trace(s, i),
            )
            .sum()
    }

    /// Tours counted by the trace that revisit a node.
    fn repeated_node_tours(&self) -> i64 {
        let [c1, c2, c3, c4] = self.codes;
        let n = self.g.n();
        let deg = |c: EdgeCode, v: usize| self.g.degree(c, v) as i64;
        let mut total = 0i64;
        if c2 == c1.transpose() && c4 == c3.transpose() {
            total += (0..n).map(|v| deg(c1, v) * deg(c3, v)).sum::<i64>();
        }
        if c3 == c2.transpose() && c1 == c4.transpose() {
            total += (0..n).map(|v| deg(c2, v) * deg(c4, v)).sum::<i64>();
        }
        if c2 == c1.transpose() && c3 == c1 && c4 == c1.transpose() {
            total -= (0..n).map(|v| deg(c1, v)).sum::<i64>();
        }
        total
    }
}

#[doc(hidden)]
pub fn fast_count_with_fault(g: &DirectedGraph, pattern: &CyclePattern, fault: Fault) -> Result<u64> {
    let codes: [EdgeCode; 4] = pattern.codes().try_into().map_err(|_| {
        LcrError::domain(format!(
            "the fast counter handles length-4 patterns only, got length {}",
            pattern.len()
        ))
    })?;
    let kernel = Kernel::new(g, codes, fault);
    let mut count = kernel.trace();
    if fault != Fault::KeepRepeatedNodes {
        count -= kernel.repeated_node_tours();
    }
    debug_assert!(count >= 0 || fault != Fault::None);
    Ok(count.max(0) as u64)
}

/// Count of a length-4 pattern over distinct tours; equals
/// [`super::brute_force_count`] on every graph.
pub fn fast_count(g: &DirectedGraph, pattern: &CyclePattern) -> Result<u64> {
    fast_count_with_fault(g, pattern, Fault::None)
}

/// `(Q(a), Q(b))` for a length-4 pair.
pub fn fast_count_pair(g: &DirectedGraph, pair: &CancellationPair) -> Result<(u64, u64)> {
    Ok((fast_count(g, &pair.a)?, fast_count(g, &pair.b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::brute_force_count;
    use crate::model::ModelParams;

    #[test]
    fn every_pattern_matches_enumeration() {
        let params = ModelParams::homogeneous(9, 0.7, -0.4).unwrap();
        let g = params.sample(3);
        for idx in 0..256 {
            let p = CyclePattern::from_index(4, idx);
            assert_eq!(
                fast_count(&g, &p).unwrap(),
                brute_force_count(&g, &p).unwrap(),
                "pattern {p}"
            );
        }
    }

    #[test]
    fn degenerate_graphs() {
        let pair = CancellationPair::default_pair();
        assert_eq!(fast_count_pair(&DirectedGraph::empty(7), &pair).unwrap(), (0, 0));
        let full = ModelParams::homogeneous(7, 50.0, 50.0).unwrap().sample(0);
        assert_eq!(fast_count_pair(&full, &pair).unwrap(), (0, 0));
    }

    #[test]
    fn faults_are_detected() {
        let g = ModelParams::homogeneous(12, 0.5, -0.8).unwrap().sample(9);
        let a = &CancellationPair::default_pair().a;
        let truth = brute_force_count(&g, a).unwrap();
        assert_ne!(fast_count_with_fault(&g, a, Fault::KeepNullDiagonal).unwrap(), truth);
        let p: CyclePattern = "10,01,10,01".parse().unwrap();
        let truth = brute_force_count(&g, &p).unwrap();
        assert_ne!(fast_count_with_fault(&g, &p, Fault::KeepRepeatedNodes).unwrap(), truth);
    }

    #[test]
    fn rejects_other_lengths() {
        let p: CyclePattern = "10,01,10".parse().unwrap();
        assert!(fast_count(&DirectedGraph::empty(4), &p).is_err());
    }
}
