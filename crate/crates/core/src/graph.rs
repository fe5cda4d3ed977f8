//! Simple directed graphs stored as dyad states.
//!
//! Every statistic in this crate is a function of the state of each
//! unordered node pair (the *dyad*), so the graph keeps exactly one record per
//! non-empty dyad. From these records it derives, once, sorted neighbour lists
//! for the three sparse edge-type views `A^10`, `A^01`, `A^11` and for the
//! union of all edges. The `A^00` view is never materialized; callers use
//! [`DirectedGraph::degree`] and complement identities instead.
//!
//! Ordered-pair convention: for `i != j`, the code of `(i, j)` is
//! `(A_ij, A_ji)`. So `10` means an edge `i -> j` without the reverse edge,
//! and the code of `(j, i)` is the transpose of the code of `(i, j)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LcrError, Result};

/// The type of a dyad seen from an ordered pair `(i, j)`: `(A_ij, A_ji)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum EdgeCode {
    /// `00`: no edge either way.
    #[serde(rename = "00")]
    Null = 0b00,
    /// `10`: `i -> j` only.
    #[serde(rename = "10")]
    Forward = 0b10,
    /// `01`: `j -> i` only.
    #[serde(rename = "01")]
    Backward = 0b01,
    /// `11`: edges both ways.
    #[serde(rename = "11")]
    Mutual = 0b11,
}

impl EdgeCode {
    pub const ALL: [EdgeCode; 4] = [
        EdgeCode::Null,
        EdgeCode::Forward,
        EdgeCode::Backward,
        EdgeCode::Mutual,
    ];

    pub fn from_bits(forward: bool, backward: bool) -> Self {
        match (forward, backward) {
            (false, false) => EdgeCode::Null,
            (true, false) => EdgeCode::Forward,
            (false, true) => EdgeCode::Backward,
            (true, true) => EdgeCode::Mutual,
        }
    }

    /// `A_ij` for an ordered pair with this code.
    pub fn forward_bit(self) -> bool {
        matches!(self, EdgeCode::Forward | EdgeCode::Mutual)
    }

    /// `A_ji` for an ordered pair with this code.
    pub fn backward_bit(self) -> bool {
        matches!(self, EdgeCode::Backward | EdgeCode::Mutual)
    }

    /// The code of the reversed ordered pair.
    pub fn transpose(self) -> Self {
        match self {
            EdgeCode::Forward => EdgeCode::Backward,
            EdgeCode::Backward => EdgeCode::Forward,
            c => c,
        }
    }

    pub fn is_null(self) -> bool {
        self == EdgeCode::Null
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeCode::Null => "00",
            EdgeCode::Forward => "10",
            EdgeCode::Backward => "01",
            EdgeCode::Mutual => "11",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeCode {
    type Err = LcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(EdgeCode::Null),
            "10" => Ok(EdgeCode::Forward),
            "01" => Ok(EdgeCode::Backward),
            "11" => Ok(EdgeCode::Mutual),
            other => Err(LcrError::parse(None, format!("unknown edge code {other:?}"))),
        }
    }
}

/// Compressed rows of sorted neighbour ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Rows {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Rows {
    fn build(n: usize, mut pairs: Vec<(u32, u32)>) -> Self {
        pairs.sort_unstable();
        let mut offsets = vec![0usize; n + 1];
        for &(i, _) in &pairs {
            offsets[i as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Rows {
            offsets,
            targets: pairs.into_iter().map(|(_, j)| j).collect(),
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Counters collected while building a graph from raw edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub edges_read: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// A simple directed graph on nodes `0..n`, immutable after construction.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    n: usize,
    /// `(i, j, code of (i, j))` with `i < j`, sorted, code never `00`.
    dyads: Vec<(u32, u32, EdgeCode)>,
    forward: Rows,
    backward: Rows,
    mutual: Rows,
    any: Rows,
}

impl PartialEq for DirectedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dyads == other.dyads
    }
}

impl Eq for DirectedGraph {}

impl DirectedGraph {
    /// The graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Self::from_dyad_states(n, Vec::new()).expect("empty graph is valid")
    }

    /// Builds a graph from dyad records `(i, j, code of (i, j))`.
    ///
    /// Records may come in any order and with either orientation; `00`
    /// records are skipped. Two records for the same dyad are an error.
    pub fn from_dyad_states(n: usize, records: Vec<(usize, usize, EdgeCode)>) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(LcrError::capacity(format!("{n} nodes exceeds the u32 id space")));
        }
        let mut dyads = Vec::with_capacity(records.len());
        for (i, j, code) in records {
            if i >= n || j >= n {
                return Err(LcrError::domain(format!("dyad ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(LcrError::domain(format!("self-loop at node {i}")));
            }
            if code.is_null() {
                continue;
            }
            if i < j {
                dyads.push((i as u32, j as u32, code));
            } else {
                dyads.push((j as u32, i as u32, code.transpose()));
            }
        }
        dyads.sort_unstable();
        if let Some(w) = dyads.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(LcrError::domain(format!(
                "dyad ({}, {}) given twice",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_dyads(n, dyads))
    }

    fn from_sorted_dyads(n: usize, dyads: Vec<(u32, u32, EdgeCode)>) -> Self {
        let mut fwd = Vec::new();
        let mut bwd = Vec::new();
        let mut mutual = Vec::new();
        let mut any = Vec::with_capacity(2 * dyads.len());
        for &(i, j, code) in &dyads {
            match code {
                EdgeCode::Forward => {
                    fwd.push((i, j));
                    bwd.push((j, i));
                }
                EdgeCode::Backward => {
                    bwd.push((i, j));
                    fwd.push((j, i));
                }
                EdgeCode::Mutual => {
                    mutual.push((i, j));
                    mutual.push((j, i));
                }
                EdgeCode::Null => unreachable!("null dyads are never stored"),
            }
            any.push((i, j));
            any.push((j, i));
        }
        DirectedGraph {
            n,
            dyads,
            forward: Rows::build(n, fwd),
            backward: Rows::build(n, bwd),
            mutual: Rows::build(n, mutual),
            any: Rows::build(n, any),
        }
    }

    /// Builds a graph from directed edges `(source, target)`.
    ///
    /// Repeated edges collapse; an edge together with its reverse becomes a
    /// mutual dyad; self-loops are dropped. Both are counted in the returned
    /// [`IngestStats`]. An id outside `0..n` is a parse error whose line is
    /// the 1-based position of the offending edge.
    pub fn from_edge_list(edges: &[(usize, usize)], n: usize) -> Result<(Self, IngestStats)> {
        let mut stats = IngestStats {
            edges_read: edges.len(),
            ..Default::default()
        };
        let mut directed: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for (pos, &(s, t)) in edges.iter().enumerate() {
            if s >= n || t >= n {
                return Err(LcrError::parse(
                    Some(pos + 1),
                    format!("node id out of range: ({s}, {t}) with n = {n}"),
                ));
            }
            if s == t {
                stats.self_loops += 1;
                continue;
            }
            directed.push((s as u32, t as u32));
        }
        directed.sort_unstable();
        let before = directed.len();
        directed.dedup();
        stats.duplicates = before - directed.len();

        // Merge both orientations of each dyad.
        let mut keyed: Vec<(u32, u32, bool)> = directed
            .into_iter()
            .map(|(s, t)| if s < t { (s, t, true) } else { (t, s, false) })
            .collect();
        keyed.sort_unstable();
        let mut dyads: Vec<(u32, u32, EdgeCode)> = Vec::with_capacity(keyed.len());
        for (i, j, low_to_high) in keyed {
            let (f, b) = if low_to_high { (true, false) } else { (false, true) };
            match dyads.last_mut() {
                Some(last) if last.0 == i && last.1 == j => {
                    last.2 = EdgeCode::from_bits(
                        last.2.forward_bit() || f,
                        last.2.backward_bit() || b,
                    );
                }
                _ => dyads.push((i, j, EdgeCode::from_bits(f, b))),
            }
        }
        Ok((Self::from_sorted_dyads(n, dyads), stats))
    }

    /// Directed edges in lexicographic order.
    pub fn to_edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for &(i, j, code) in &self.dyads {
            if code.forward_bit() {
                out.push((i as usize, j as usize));
            }
            if code.backward_bit() {
                out.push((j as usize, i as usize));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of directed edges (a mutual dyad counts twice).
    pub fn edge_count(&self) -> usize {
        self.forward.targets.len() + self.mutual.targets.len()
    }

    /// Number of non-empty dyads.
    pub fn dyad_count(&self) -> usize {
        self.dyads.len()
    }

    /// Non-empty dyads as `(i, j, code of (i, j))` with `i < j`.
    pub fn dyads(&self) -> impl Iterator<Item = (usize, usize, EdgeCode)> + '_ {
        self.dyads
            .iter()
            .map(|&(i, j, c)| (i as usize, j as usize, c))
    }

    /// The code of the ordered pair `(i, j)`; `00` on the diagonal.
    pub fn code(&self, i: usize, j: usize) -> EdgeCode {
        if i == j {
            return EdgeCode::Null;
        }
        let (lo, hi, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        match self
            .dyads
            .binary_search_by(|&(a, b, _)| (a as usize, b as usize).cmp(&(lo, hi)))
        {
            Ok(pos) => {
                let c = self.dyads[pos].2;
                if flip {
                    c.transpose()
                } else {
                    c
                }
            }
            Err(_) => EdgeCode::Null,
        }
    }

    /// `A_ij`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.code(i, j).forward_bit()
    }

    /// Sorted `{j : A^code_ij = 1}` for a sparse code.
    ///
    /// # Panics
    /// For [`EdgeCode::Null`], whose rows are dense.
    #[inline]
    pub fn neighbors(&self, code: EdgeCode, i: usize) -> &[u32] {
        match code {
            EdgeCode::Forward => self.forward.row(i),
            EdgeCode::Backward => self.backward.row(i),
            EdgeCode::Mutual => self.mutual.row(i),
            EdgeCode::Null => panic!("the 00 view is dense and has no neighbour list"),
        }
    }

    /// Sorted ids of all nodes sharing a non-empty dyad with `i`.
    #[inline]
    pub fn adjacent(&self, i: usize) -> &[u32] {
        self.any.row(i)
    }

    /// `#{j != i : A^code_ij = 1}`, including the dense `00` view.
    #[inline]
    pub fn degree(&self, code: EdgeCode, i: usize) -> usize {
        match code {
            EdgeCode::Null => self.n - 1 - self.any.row(i).len(),
            c => self.neighbors(c, i).len(),
        }
    }

    /// Number of ordered pairs `(i, j)`, `i != j`, whose code is `code`.
    pub fn edge_type_count(&self, code: EdgeCode) -> u64 {
        let n = self.n as u64;
        match code {
            EdgeCode::Forward => self.forward.targets.len() as u64,
            EdgeCode::Backward => self.backward.targets.len() as u64,
            EdgeCode::Mutual => self.mutual.targets.len() as u64,
            EdgeCode::Null => n * n.saturating_sub(1) - self.any.targets.len() as u64,
        }
    }

    pub fn degrees(&self) -> DegreeSummary {
        let n = self.n;
        let out_deg: Vec<usize> = (0..n).map(|i| self.forward.row(i).len()).collect();
        let in_deg: Vec<usize> = (0..n).map(|i| self.backward.row(i).len()).collect();
        let recip_deg: Vec<usize> = (0..n).map(|i| self.mutual.row(i).len()).collect();
        let d_max = (0..n)
            .map(|i| out_deg[i].max(in_deg[i]).max(recip_deg[i]))
            .max()
            .unwrap_or(0);
        DegreeSummary {
            out_deg,
            in_deg,
            recip_deg,
            d_max,
        }
    }

    /// Total out-degree `sum_j A_ij` of every node (mutual edges included).
    pub fn out_degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.forward.row(i).len() + self.mutual.row(i).len())
            .collect()
    }

    /// Total in-degree `sum_j A_ji` of every node (mutual edges included).
    pub fn in_degrees(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| self.backward.row(i).len() + self.mutual.row(i).len())
            .collect()
    }

    /// The same graph with node `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(LcrError::domain("permutation length differs from n"));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(LcrError::domain("not a permutation"));
            }
        }
        let records = self
            .dyads()
            .map(|(i, j, c)| (perm[i], perm[j], c))
            .collect();
        Self::from_dyad_states(self.n, records)
    }

    /// Dense row-major code matrix; intended for small-graph oracles.
    pub fn code_matrix(&self) -> Vec<EdgeCode> {
        let n = self.n;
        let mut m = vec![EdgeCode::Null; n * n];
        for &(i, j, c) in &self.dyads {
            let (i, j) = (i as usize, j as usize);
            m[i * n + j] = c;
            m[j * n + i] = c.transpose();
        }
        m
    }
}

/// Per-node counts of one-way and mutual dyads.
///
/// `out_deg[i] = #{j : A^10_ij = 1}` (one-way edges leaving `i`),
/// `in_deg[i] = #{j : A^01_ij = 1}` (one-way edges entering `i`),
/// `recip_deg[i] = #{j : A^11_ij = 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub in_deg: Vec<usize>,
    pub out_deg: Vec<usize>,
    pub recip_deg: Vec<usize>,
    pub d_max: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_has_only_null_pairs() {
        let (g, stats) = DirectedGraph::from_edge_list(&[], 5).unwrap();
        assert_eq!(stats, IngestStats::default());
        assert_eq!(g.edge_type_count(EdgeCode::Null), 20);
        for c in [EdgeCode::Forward, EdgeCode::Backward, EdgeCode::Mutual] {
            assert_eq!(g.edge_type_count(c), 0);
        }
        let d = g.degrees();
        assert_eq!(d.d_max, 0);
        assert!(d.in_deg.iter().chain(&d.out_deg).chain(&d.recip_deg).all(|&x| x == 0));
    }

    #[test]
    fn reverse_edges_merge_into_mutual_dyad() {
        let (g, _) = DirectedGraph::from_edge_list(&[(0, 1), (1, 0)], 3).unwrap();
        assert_eq!(g.code(0, 1), EdgeCode::Mutual);
        assert_eq!(g.edge_type_count(EdgeCode::Mutual), 2);
        assert_eq!(g.dyad_count(), 1);
    }

    #[test]
    fn duplicates_collapse_and_are_counted() {
        let (g, stats) = DirectedGraph::from_edge_list(&[(0, 1), (0, 1)], 3).unwrap();
        assert_eq!(g.code(0, 1), EdgeCode::Forward);
        assert_eq!(g.code(1, 0), EdgeCode::Backward);
        assert_eq!(stats.duplicates, 1);
    }

    #[test]
    fn self_loops_are_dropped() {
        let (g, stats) = DirectedGraph::from_edge_list(&[(2, 2), (0, 2)], 3).unwrap();
        assert_eq!(stats.self_loops, 1);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn out_of_range_reports_position() {
        let err = DirectedGraph::from_edge_list(&[(0, 1), (0, 7)], 3).unwrap_err();
        assert!(matches!(err, LcrError::Parse { line: Some(2), .. }), "{err:?}");
    }

    #[test]
    fn single_forward_dyad_degrees() {
        let (g, _) = DirectedGraph::from_edge_list(&[(0, 1)], 4).unwrap();
        let d = g.degrees();
        assert_eq!(d.out_deg[0], 1);
        assert_eq!(d.in_deg[1], 1);
        assert_eq!(d.out_deg[1] + d.in_deg[0] + d.recip_deg.iter().sum::<usize>(), 0);
        assert_eq!(g.neighbors(EdgeCode::Forward, 0), &[1]);
        assert_eq!(g.neighbors(EdgeCode::Backward, 1), &[0]);
        assert_eq!(g.degree(EdgeCode::Null, 0), 2);
    }

    #[test]
    fn duplicate_dyad_records_are_rejected() {
        let err = DirectedGraph::from_dyad_states(
            4,
            vec![(0, 1, EdgeCode::Forward), (1, 0, EdgeCode::Forward)],
        )
        .unwrap_err();
        assert!(matches!(err, LcrError::Domain(_)));
    }

    #[test]
    fn edge_code_strings() {
        for c in EdgeCode::ALL {
            assert_eq!(c.as_str().parse::<EdgeCode>().unwrap(), c);
            assert_eq!(c.transpose().transpose(), c);
        }
        assert!("12".parse::<EdgeCode>().is_err());
    }
}
