use nalgebra::{DMatrix, DVector};

use lcr::graph::{DirectedGraph, EdgeCode};
use lcr::mle::{existence_check, fit, log_likelihood_at, ExistenceVerdict, SolverConfig};
use lcr::model::{draw_heterogeneity, ModelParams};

/// Six nodes, every dyad mutual except a directed 6-cycle of one-way dyads
/// and one empty dyad.
fn nearly_complete() -> DirectedGraph {
    let n = 6;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let removed_cycle = j == (i + 1) % n;
            let removed_pair = (i, j) == (0, 3) || (i, j) == (3, 0);
            if i != j && !removed_cycle && !removed_pair {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::from_edge_list(&edges, n).unwrap().0
}

/// `(ρ, γ, α, β)` from free coordinates; the last α and β close the sums.
fn unpack(x: &DVector<f64>, n: usize) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let mut alpha: Vec<f64> = (0..n - 1).map(|k| x[2 + k]).collect();
    let mut beta: Vec<f64> = (0..n - 1).map(|k| x[n + 1 + k]).collect();
    alpha.push(-alpha.iter().sum::<f64>());
    beta.push(-beta.iter().sum::<f64>());
    (x[0], x[1], alpha, beta)
}

/// Direct dyad-by-dyad log-likelihood.
fn loglik(g: &DirectedGraph, x: &DVector<f64>) -> f64 {
    let n = g.n();
    let (rho, gamma, alpha, beta) = unpack(x, n);
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let f = gamma + alpha[i] + beta[j];
            let b = gamma + alpha[j] + beta[i];
            let w = [0.0, f, b, f + b + rho];
            let lse = w.iter().map(|v| v.exp()).sum::<f64>().ln();
            let k = match g.code(i, j) {
                EdgeCode::Null => 0,
                EdgeCode::Forward => 1,
                EdgeCode::Backward => 2,
                EdgeCode::Mutual => 3,
            };
            total += w[k] - lse;
        }
    }
    total
}

/// Newton's method on finite-difference derivatives with step halving.
fn newton_oracle(g: &DirectedGraph) -> DVector<f64> {
    let dim = 2 * g.n();
    let f = |x: &DVector<f64>| loglik(g, x);
    let mut x = DVector::zeros(dim);
    let h = 1e-4;
    for _ in 0..100 {
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        let e = |k: usize| {
            let mut v = DVector::zeros(dim);
            v[k] = h;
            v
        };
        for a in 0..dim {
            grad[a] = (f(&(&x + e(a))) - f(&(&x - e(a)))) / (2.0 * h);
            for b in 0..dim {
                hess[(a, b)] = (f(&(&x + e(a) + e(b))) - f(&(&x + e(a) - e(b))) - f(&(&x - e(a) + e(b)))
                    + f(&(&x - e(a) - e(b))))
                    / (4.0 * h * h);
            }
        }
        if grad.amax() < 1e-9 {
            break;
        }
        let step = hess.lu().solve(&(-&grad)).expect("Hessian is invertible");
        let mut t = 1.0;
        while f(&(&x + t * &step)) < f(&x) && t > 1e-8 {
            t /= 2.0;
        }
        x += t * step;
    }
    x
}

#[test]
fn fit_matches_generic_newton_at_six_nodes() {
    let g = nearly_complete();
    assert_eq!(existence_check(&g).verdict, ExistenceVerdict::Unknown);
    let fitted = fit(&g, &SolverConfig::default()).unwrap();
    assert!(fitted.converged && !fitted.diverged);
    let x = newton_oracle(&g);
    let (rho, gamma, alpha, beta) = unpack(&x, g.n());
    assert!((fitted.rho - rho).abs() < 1e-4, "{} vs {rho}", fitted.rho);
    assert!((fitted.gamma - gamma).abs() < 1e-4, "{} vs {gamma}", fitted.gamma);
    for k in 0..g.n() {
        assert!((fitted.alpha[k] - alpha[k]).abs() < 1e-4);
        assert!((fitted.beta[k] - beta[k]).abs() < 1e-4);
    }
    let at_oracle = log_likelihood_at(&g, rho, gamma, &alpha, &beta);
    assert!((fitted.log_likelihood - at_oracle).abs() < 1e-8);
}

#[test]
fn converged_fits_have_small_scores() {
    let config = SolverConfig::default();
    for seed in 0..5 {
        let (alpha, beta) = draw_heterogeneity(60, seed);
        let g = ModelParams::new(0.4, -1.0, alpha, beta).unwrap().sample(seed + 100);
        let f = fit(&g, &config).unwrap();
        if f.converged {
            assert!(f.gradient_norm <= config.tol);
        }
    }
}

#[test]
fn dense_samples_are_typically_unflagged() {
    let unflagged = (0..10)
        .filter(|&seed| {
            let (alpha, beta) = draw_heterogeneity(100, seed);
            let g = ModelParams::new(0.5, -1.0, alpha, beta).unwrap().sample(seed + 50);
            existence_check(&g).verdict == ExistenceVerdict::Unknown
        })
        .count();
    assert!(unflagged >= 8, "{unflagged} of 10");
}
