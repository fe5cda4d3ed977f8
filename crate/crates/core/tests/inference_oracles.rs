use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use lcr::cycles::CancellationPair;
use lcr::graph::{DirectedGraph, EdgeCode};
use lcr::inference::{analyze_with, estimate, rst_hat, variance_hat_with, VarianceForm};
use lcr::model::{draw_heterogeneity, ModelParams};
use lcr::rng::{derive_seed, generator};

fn seeded_graph(seed: u64, n: usize) -> DirectedGraph {
    let mut rng = generator(seed);
    let rho = rng.random_range(-1.0..2.0);
    let gamma = rng.random_range(-2.0..0.0);
    let (alpha, beta) = draw_heterogeneity(n, derive_seed(seed, 1, 0));
    ModelParams::new(rho, gamma, alpha, beta).unwrap().sample(derive_seed(seed, 2, 0))
}

/// Three-step path sums for the pair `(i, j)`; `null_steps` keeps the
/// `00` factors on the outer steps.
fn path_sums(g: &DirectedGraph, i: usize, j: usize, null_steps: bool) -> (i64, i64, i64) {
    let n = g.n();
    let a = |c: EdgeCode, u: usize, v: usize| i64::from(g.code(u, v) == c);
    let outer = |u: usize, v: usize| if null_steps { a(EdgeCode::Null, u, v) } else { 1 };
    let (f, b, m) = (EdgeCode::Forward, EdgeCode::Backward, EdgeCode::Mutual);
    let (mut r, mut s, mut t) = (0, 0, 0);
    for k in (0..n).filter(|&k| k != i && k != j) {
        for l in (0..n).filter(|&l| l != i && l != j && l != k) {
            let ends = outer(j, k) * outer(l, i);
            r += ends * a(b, k, l);
            s += ends * a(m, k, l);
            t += a(f, j, k) * a(f, k, l) * outer(l, i)
                + outer(j, k) * a(f, k, l) * a(f, l, i)
                + a(f, j, k) * outer(k, l) * a(f, l, i);
        }
    }
    (r, s, t)
}

fn literal_variance(g: &DirectedGraph, rho: f64, null_steps: bool) -> (f64, f64) {
    let n = g.n();
    let (mut v, mut w) = (0.0, 0.0);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let (r, s, t) = path_sums(g, i, j, null_steps);
            match g.code(i, j) {
                EdgeCode::Mutual => {
                    let x = 2.0 * (r * r) as f64;
                    v += x;
                    w += x;
                }
                EdgeCode::Forward => v += (s as f64 - rho.exp() * t as f64).powi(2),
                _ => {}
            }
        }
    }
    (v, w)
}

#[test]
fn closed_form_sums_match_literal_sums() {
    (0..100u64).into_par_iter().for_each(|k| {
        let n = 5 + (k % 26) as usize;
        let g = seeded_graph(derive_seed(1, 0, k), n);
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                assert_eq!(rst_hat(&g, i, j).unwrap(), path_sums(&g, i, j, false), "graph {k}, ({i}, {j})");
            }
        }
    });
}

#[test]
fn plug_in_variance_matches_quadruple_sums() {
    for k in 0..30u64 {
        let n = 6 + (k % 9) as usize;
        let g = seeded_graph(derive_seed(2, 0, k), n);
        let rho = 0.3 * k as f64 - 2.0;
        for (form, null_steps) in [(VarianceForm::Complete, true), (VarianceForm::SparseLimit, false)] {
            let got = variance_hat_with(&g, rho, 1, form).unwrap();
            let (v, w) = literal_variance(&g, rho, null_steps);
            assert!((got.v_hat - v).abs() <= 1e-9 * v.max(1.0), "{form:?} graph {k}: {} vs {v}", got.v_hat);
            assert!((got.w_hat - w).abs() <= 1e-9 * w.max(1.0), "{form:?} graph {k}");
        }
    }
}

#[test]
fn statistics_are_invariant_under_relabeling() {
    let mut rng = generator(8);
    for k in 0..10u64 {
        let g = seeded_graph(derive_seed(3, 0, k), 40);
        let mut perm: Vec<usize> = (0..40).collect();
        perm.shuffle(&mut rng);
        let h = g.relabel(&perm).unwrap();
        for form in [VarianceForm::Complete, VarianceForm::SparseLimit] {
            let pair = CancellationPair::default_pair();
            let a = analyze_with(&g, &pair, 0.0, 0.05, form).unwrap();
            let b = analyze_with(&h, &pair, 0.0, 0.05, form).unwrap();
            assert_eq!((a.estimate.qa, a.estimate.qb), (b.estimate.qa, b.estimate.qb));
            assert_eq!(a.estimate.rho_star, b.estimate.rho_star);
            let (va, vb) = (a.variance.unwrap(), b.variance.unwrap());
            assert!((va.v_hat - vb.v_hat).abs() <= 1e-9 * va.v_hat.max(1.0));
            let (pa, pb) = (a.test.psi_star.unwrap(), b.test.psi_star.unwrap());
            assert!((pa - pb).abs() <= 1e-9 * pa.abs().max(1.0));
        }
    }
}

#[test]
fn estimate_is_close_on_dense_graphs() {
    let n = 1000;
    let gamma = -(n as f64).ln() / 4.0;
    let seeds = 40u64;
    let hits = (0..seeds)
        .into_par_iter()
        .filter(|&s| {
            let (alpha, beta) = draw_heterogeneity(n, derive_seed(55, s, 0));
            let g = ModelParams::new(0.5, gamma, alpha, beta)
                .unwrap()
                .sample(derive_seed(55, s, 1));
            let est = estimate(&g, &CancellationPair::default_pair()).unwrap();
            (est.rho_star.unwrap() - 0.5).abs() <= 0.05
        })
        .count();
    assert!(hits as f64 >= 0.95 * seeds as f64, "{hits} of {seeds}");
}
