use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use lcr::cycles::{
    brute_force_count, canonical_pair, constructive_family, expected_count, fast_count, fast_count_pair,
    pair_search, CancellationPair, CyclePattern,
};
use lcr::graph::EdgeCode;
use lcr::model::{draw_heterogeneity, ModelParams};
use lcr::rng::{derive_seed, generator};

fn random_params(seed: u64, n: usize) -> ModelParams {
    let mut rng = generator(seed);
    let rho = rng.random_range(-1.5..2.0);
    let gamma = rng.random_range(-2.5..0.5);
    let (alpha, beta) = draw_heterogeneity(n, derive_seed(seed, 9, 9));
    ModelParams::new(rho, gamma, alpha, beta).unwrap()
}

#[test]
fn monomials_match_literal_weight_products() {
    let mut rng = generator(404);
    for trial in 0..1000 {
        let n = 9;
        let params = random_params(derive_seed(404, 0, trial), n);
        let plr = params.plr();
        let codes: Vec<EdgeCode> = (0..4).map(|_| EdgeCode::ALL[rng.random_range(0..4)]).collect();
        let pattern = CyclePattern::new(codes.clone()).unwrap();
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut rng);
        nodes.truncate(4);
        let literal: f64 = (0..4)
            .map(|k| plr.omega_tilde(params.rho(), codes[k], nodes[k], nodes[(k + 1) % 4]).unwrap())
            .product();
        let symbolic = pattern.monomial().evaluate(&plr.mu, &plr.nu, params.rho(), &nodes);
        assert!(
            (symbolic / literal - 1.0).abs() <= 1e-12,
            "{pattern} at {nodes:?}: {symbolic} vs {literal}"
        );
    }
}

#[test]
fn default_pair_matches_enumeration_at_ten_nodes() {
    let g = random_params(31, 10).sample(32);
    let pair = CancellationPair::default_pair();
    let (qa, qb) = fast_count_pair(&g, &pair).unwrap();
    assert_eq!(qa, brute_force_count(&g, &pair.a).unwrap());
    assert_eq!(qb, brute_force_count(&g, &pair.b).unwrap());
    assert!(qa > 0 && qb > 0);
}

#[test]
fn all_pairs_match_enumeration_on_two_hundred_graphs() {
    for k in 0..200u64 {
        let n = 8 + (k % 7) as usize;
        let g = random_params(derive_seed(77, 0, k), n).sample(derive_seed(77, 1, k));
        for pair in CancellationPair::quadrilaterals() {
            for p in [&pair.a, &pair.b] {
                assert_eq!(fast_count(&g, p).unwrap(), brute_force_count(&g, p).unwrap(), "graph {k}, {p}");
            }
        }
    }
}

#[test]
fn expected_count_agrees_with_simulation() {
    let params = random_params(12, 8);
    let pattern: CyclePattern = "00,00,00,00".parse().unwrap();
    let exact = expected_count(&params, &pattern).unwrap();
    let draws: Vec<f64> = (0..2000)
        .map(|s| brute_force_count(&params.sample(derive_seed(12, 2, s)), &pattern).unwrap() as f64)
        .collect();
    let m = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / m;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    assert!((mean - exact).abs() <= 4.0 * sd / m.sqrt(), "{mean} vs {exact}");
}

#[test]
fn search_and_construction_agree() {
    for m in [4, 6] {
        let searched: BTreeSet<String> = pair_search(m)
            .unwrap()
            .iter()
            .map(|c| format!("{}/{}", c.pair.a, c.pair.b))
            .collect();
        let built: BTreeSet<String> = constructive_family(m)
            .unwrap()
            .iter()
            .map(|p| {
                let c = canonical_pair(p);
                format!("{}/{}", c.a, c.b)
            })
            .collect();
        assert_eq!(searched, built, "m = {m}");
    }
}

#[test]
fn ratio_identity_holds_for_every_searched_pair() {
    for m in [4, 6] {
        let classes = pair_search(m).unwrap();
        for k in 0..5u64 {
            let params = random_params(derive_seed(5, m as u64, k), 9);
            for c in &classes {
                let ratio =
                    expected_count(&params, &c.pair.a).unwrap() / expected_count(&params, &c.pair.b).unwrap();
                let target = (f64::from(c.pair.c0) * params.rho()).exp();
                assert!((ratio / target - 1.0).abs() <= 1e-10, "m = {m}, class {}", c.id);
            }
        }
    }
}
