use proptest::prelude::*;

use lcr::cycles::{brute_force_count, fast_count, CancellationPair};
use lcr::graph::{DirectedGraph, EdgeCode};
use lcr::inference::{analyze, hard_threshold, variance_hat_with, VarianceForm};
use lcr::io::{parse_edge_list, write_edge_list};
use lcr::mle::log_likelihood_at;
use lcr::model::ModelParams;

fn graph(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
    (3..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..n * n).prop_map(move |edges| {
            DirectedGraph::from_edge_list(&edges, n).unwrap().0
        })
    })
}

fn params(max_n: usize) -> impl Strategy<Value = (f64, f64, Vec<f64>, Vec<f64>)> {
    (3..=max_n).prop_flat_map(|n| {
        (
            -3.0..3.0f64,
            -4.0..1.0f64,
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyad_laws_are_distributions((rho, gamma, alpha, beta) in params(8)) {
        let p = ModelParams::new(rho, gamma, alpha, beta).unwrap();
        for i in 0..p.n() {
            for j in (0..p.n()).filter(|&j| j != i) {
                let d = p.dyad_distribution(i, j).unwrap();
                prop_assert!((d.p00 + d.p10 + d.p01 + d.p11 - 1.0).abs() < 1e-12);
                let swapped = p.dyad_distribution(j, i).unwrap();
                prop_assert!((swapped.p10 - d.p01).abs() < 1e-15);
                prop_assert!((swapped.p01 - d.p10).abs() < 1e-15);
                prop_assert!((swapped.p11 - d.p11).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn recentering_preserves_dyad_laws((rho, gamma, alpha, beta) in params(6), shift in -1.0..1.0f64) {
        let p = ModelParams::new(rho, gamma, alpha.clone(), beta.clone()).unwrap();
        let shifted: Vec<f64> = alpha.iter().map(|a| a + shift).collect();
        let q = ModelParams::new(rho, gamma - shift, shifted, beta).unwrap();
        let (a, b) = (p.dyad_distribution(0, 1).unwrap(), q.dyad_distribution(0, 1).unwrap());
        prop_assert!((a.p11 - b.p11).abs() < 1e-12 && (a.p10 - b.p10).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic((rho, gamma, alpha, beta) in params(12), seed in any::<u64>()) {
        let p = ModelParams::new(rho, gamma, alpha, beta).unwrap();
        prop_assert_eq!(p.sample(seed), p.sample(seed));
    }

    #[test]
    fn type_counts_cover_all_ordered_pairs(g in graph(12)) {
        let n = g.n() as u64;
        let total: u64 = EdgeCode::ALL.iter().map(|&c| g.edge_type_count(c)).sum();
        prop_assert_eq!(total, n * (n - 1));
        prop_assert_eq!(g.edge_type_count(EdgeCode::Forward), g.edge_type_count(EdgeCode::Backward));
    }

    #[test]
    fn edge_lists_round_trip(g in graph(12)) {
        let (back, stats) = DirectedGraph::from_edge_list(&g.to_edge_list(), g.n()).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(stats.duplicates, 0);
        let mut text = Vec::new();
        write_edge_list(&g, None, &mut text).unwrap();
        let loaded = parse_edge_list(std::str::from_utf8(&text).unwrap(), Some(g.n())).unwrap();
        prop_assert_eq!(loaded.graph, g);
    }

    #[test]
    fn fast_counts_equal_enumeration(g in graph(9), idx in 0usize..256) {
        let codes: Vec<EdgeCode> = (0..4).map(|k| EdgeCode::ALL[(idx >> (2 * k)) & 3]).collect();
        let p = lcr::cycles::CyclePattern::new(codes).unwrap();
        prop_assert_eq!(fast_count(&g, &p).unwrap(), brute_force_count(&g, &p).unwrap());
    }

    #[test]
    fn thresholding_is_exact(x in -1e6..1e6f64, t in 0.0..1e3f64) {
        let h = hard_threshold(x, t);
        if x.abs() <= t {
            prop_assert_eq!(h, x);
        } else {
            prop_assert_eq!(h, t.copysign(x));
        }
    }

    #[test]
    fn variance_decomposes(g in graph(14), rho in -2.0..2.0f64) {
        for form in [VarianceForm::Complete, VarianceForm::SparseLimit] {
            let v = variance_hat_with(&g, rho, 1, form).unwrap();
            prop_assert!(v.w_hat >= 0.0);
            prop_assert!(v.v_hat >= v.w_hat);
        }
    }

    #[test]
    fn centered_statistic_matches_counts(g in graph(12), rho in -2.0..2.0f64) {
        let a = analyze(&g, &CancellationPair::default_pair(), 0.0, 0.05).unwrap();
        let direct = a.estimate.qa as f64 - rho.exp() * a.estimate.qb as f64;
        prop_assert_eq!(a.estimate.u_statistic(rho), direct);
    }

    #[test]
    fn likelihood_ignores_offsetting_shifts(g in graph(10), c in -1.0..1.0f64, rho in -1.0..1.0f64) {
        let n = g.n();
        let alpha: Vec<f64> = (0..n).map(|k| 0.1 * k as f64 - 0.3).collect();
        let beta: Vec<f64> = (0..n).map(|k| 0.05 * k as f64).collect();
        let base = log_likelihood_at(&g, rho, -1.0, &alpha, &beta);
        let moved: Vec<f64> = alpha.iter().map(|a| a + c).collect();
        let shifted = log_likelihood_at(&g, rho, -1.0 - c, &moved, &beta);
        prop_assert!((base - shifted).abs() <= 1e-9 * base.abs().max(1.0));
    }
}
