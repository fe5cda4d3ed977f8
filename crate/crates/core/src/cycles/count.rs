//! Enumerative counts over ordered tuples of distinct nodes.
//!
//! These are the slow reference definitions: a depth-first walk over all
//! `n (n-1) ... (n-m+1)` tours. No symmetry factor is applied; a cycle is
//! counted once per starting node and direction it matches in.

use super::pattern::CyclePattern;
use crate::error::{LcrError, Result};
use crate::graph::{DirectedGraph, EdgeCode};
use crate::model::ModelParams;

/// Tour budget of [`brute_force_count`] (`14·13·12·11`).
pub const BRUTE_FORCE_MAX_TOURS: u128 = 24_024;
/// Tour budget of [`expected_count`] (`60·59·58·57`).
pub const EXPECTED_COUNT_MAX_TOURS: u128 = 11_703_240;

fn falling_factorial(n: usize, m: usize) -> u128 {
    (0..m).map(|k| n.saturating_sub(k) as u128).product()
}

fn check_budget(n: usize, m: usize, budget: u128, what: &str) -> Result<()> {
    let tours = falling_factorial(n, m);
    if tours > budget {
        return Err(LcrError::capacity(format!(
            "{what} over {tours} tours (n = {n}, m = {m}) exceeds the limit of {budget}"
        )));
    }
    Ok(())
}

/// Walks every tour of distinct nodes, multiplying `weight(code_k, u, v)`
/// along the way and pruning on zero.
fn walk<T, W>(n: usize, codes: &[EdgeCode], weight: W) -> T
where
    T: Copy + std::ops::AddAssign + std::ops::Mul<Output = T> + PartialEq + From<u8>,
    W: Fn(EdgeCode, usize, usize) -> T,
{
    fn rec<T, W>(
        codes: &[EdgeCode],
        weight: &W,
        n: usize,
        tour: &mut Vec<usize>,
        used: &mut [bool],
        acc: T,
        total: &mut T,
    ) where
        T: Copy + std::ops::AddAssign + std::ops::Mul<Output = T> + PartialEq + From<u8>,
        W: Fn(EdgeCode, usize, usize) -> T,
    {
        let m = codes.len();
        let depth = tour.len();
        let last = tour[depth - 1];
        if depth == m {
            let w = weight(codes[m - 1], last, tour[0]);
            *total += acc * w;
            return;
        }
        for v in 0..n {
            if used[v] {
                continue;
            }
            let w = weight(codes[depth - 1], last, v);
            if w == T::from(0) {
                continue;
            }
            used[v] = true;
            tour.push(v);
            rec(codes, weight, n, tour, used, acc * w, total);
            tour.pop();
            used[v] = false;
        }
    }

    let mut total = T::from(0);
    let mut used = vec![false; n];
    let mut tour = Vec::with_capacity(codes.len());
    for start in 0..n {
        used[start] = true;
        tour.push(start);
        rec(codes, &weight, n, &mut tour, &mut used, T::from(1), &mut total);
        tour.pop();
        used[start] = false;
    }
    total
}

/// `Σ_{distinct i_1..i_m} Π_k A^{a_k}_{i_k i_{k+1}}`.
pub fn brute_force_count(g: &DirectedGraph, pattern: &CyclePattern) -> Result<u64> {
    let n = g.n();
    check_budget(n, pattern.len(), BRUTE_FORCE_MAX_TOURS, "brute-force count")?;
    let codes = g.code_matrix();
    Ok(walk::<u64, _>(n, pattern.codes(), |c, u, v| u64::from(codes[u * n + v] == c)))
}

/// `Σ_{distinct i_1..i_m} Π_k Ω^{a_k}_{i_k i_{k+1}}`, the mean of
/// [`brute_force_count`] under the model.
pub fn expected_count(params: &ModelParams, pattern: &CyclePattern) -> Result<f64> {
    let n = params.n();
    check_budget(n, pattern.len(), EXPECTED_COUNT_MAX_TOURS, "expected count")?;
    let plr = params.plr();
    let mut omega = vec![[0.0f64; 4]; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                for c in EdgeCode::ALL {
                    omega[i * n + j][c.index()] = plr.omega_unchecked(params.rho(), c, i, j);
                }
            }
        }
    }
    Ok(walk::<f64, _>(n, pattern.codes(), |c, u, v| omega[u * n + v][c.index()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_pattern_on_empty_graph_counts_all_tours() {
        let g = DirectedGraph::empty(5);
        let p: CyclePattern = "00,00,00,00".parse().unwrap();
        assert_eq!(brute_force_count(&g, &p).unwrap(), 120);
        let q: CyclePattern = "00,10,00,00".parse().unwrap();
        assert_eq!(brute_force_count(&g, &q).unwrap(), 0);
    }

    #[test]
    fn directed_triangle() {
        let (g, _) = DirectedGraph::from_edge_list(&[(0, 1), (1, 2), (2, 0)], 3).unwrap();
        let p: CyclePattern = "10,10,10".parse().unwrap();
        assert_eq!(brute_force_count(&g, &p).unwrap(), 3);
        let q: CyclePattern = "01,01,01".parse().unwrap();
        assert_eq!(brute_force_count(&g, &q).unwrap(), 3);
    }

    #[test]
    fn budgets_are_enforced() {
        let p: CyclePattern = "00,00,00,00".parse().unwrap();
        assert!(brute_force_count(&DirectedGraph::empty(15), &p).is_err());
        assert!(brute_force_count(&DirectedGraph::empty(14), &p).is_ok());
        let params = ModelParams::homogeneous(61, 0.0, 0.0).unwrap();
        assert!(matches!(expected_count(&params, &p), Err(LcrError::Capacity(_))));
    }

    #[test]
    fn uniform_model_expectation() {
        // every type has probability 1/4
        let params = ModelParams::homogeneous(6, 0.0, 0.0).unwrap();
        let p: CyclePattern = "00,10,01,11".parse().unwrap();
        let want = 360.0 / 256.0;
        assert!((expected_count(&params, &p).unwrap() - want).abs() < 1e-12);
    }
}
