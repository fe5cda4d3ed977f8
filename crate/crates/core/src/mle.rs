//! Maximum likelihood for the full model, used as a comparison baseline.
//!
//! The likelihood factorizes over dyads and depends on the graph only
//! through out- and in-degrees, the number of directed edges and the number
//! of mutual dyads. The solver cycles through the blocks `α`, `β`, `γ`, `ρ`;
//! each block takes a Newton step with the diagonal of the Hessian and is
//! halved until the likelihood does not decrease. After every sweep the
//! heterogeneity vectors are recentered into `γ`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{DirectedGraph, EdgeCode};
use crate::inference::normal::chi2_1_upper_tail;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the largest absolute score is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// A parameter beyond this magnitude means the supremum is at infinity.
    pub bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: 500,
            bound: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExistenceVerdict {
    /// Some degree sits on the boundary; the supremum is not attained.
    DefinitelyNonexistent,
    /// No simple obstruction found.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    /// Nodes whose out- or in-degree is `0` or `n − 1`.
    pub flagged: Vec<bool>,
    /// No mutual dyads, or no one-way dyads: `ρ` runs off to `∓∞`.
    pub reciprocity_boundary: bool,
    pub verdict: ExistenceVerdict,
}

impl ExistenceReport {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

/// Degree-based obstructions to the existence of the estimate.
pub fn existence_check(g: &DirectedGraph) -> ExistenceReport {
    let n = g.n();
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let boundary = |d: usize| d == 0 || d + 1 == n;
    let flagged: Vec<bool> = (0..n).map(|i| boundary(out[i]) || boundary(inn[i])).collect();
    let mutual = g.edge_type_count(EdgeCode::Mutual);
    let one_way = g.edge_type_count(EdgeCode::Forward);
    let reciprocity_boundary = mutual == 0 || one_way == 0;
    let verdict = if reciprocity_boundary || flagged.contains(&true) {
        ExistenceVerdict::DefinitelyNonexistent
    } else {
        ExistenceVerdict::Unknown
    };
    ExistenceReport {
        flagged,
        reciprocity_boundary,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    /// Present unless a parameter left the representable range.
    pub params_hat: Option<ModelParams>,
    pub rho: f64,
    pub gamma: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub converged: bool,
    /// Some parameter passed the divergence bound.
    pub diverged: bool,
    pub iterations: usize,
    pub max_abs_param: f64,
    pub log_likelihood: f64,
    pub gradient_norm: f64,
    pub existence: ExistenceReport,
}

struct Stats {
    n: usize,
    out: Vec<f64>,
    inn: Vec<f64>,
    edges: f64,
    mutual: f64,
}

#[derive(Clone)]
struct Point {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: f64,
    rho: f64,
}

#[derive(Clone)]
struct Eval {
    loglik: f64,
    grad_alpha: Vec<f64>,
    grad_beta: Vec<f64>,
    grad_gamma: f64,
    grad_rho: f64,
    curv_alpha: Vec<f64>,
    curv_beta: Vec<f64>,
    curv_gamma: f64,
    curv_rho: f64,
}

impl Eval {
    fn max_score(&self, rho_free: bool) -> f64 {
        let mut m = self.grad_gamma.abs();
        if rho_free {
            m = m.max(self.grad_rho.abs());
        }
        self.grad_alpha
            .iter()
            .chain(&self.grad_beta)
            .fold(m, |acc, g| acc.max(g.abs()))
    }
}

fn evaluate(stats: &Stats, p: &Point) -> Eval {
    let n = stats.n;
    let ea: Vec<f64> = p.alpha.iter().map(|a| a.exp()).collect();
    let eb: Vec<f64> = p.beta.iter().map(|b| b.exp()).collect();
    let c = p.gamma.exp();
    let r = p.rho.exp();
    let mut grad_alpha = stats.out.clone();
    let mut grad_beta = stats.inn.clone();
    let mut curv_alpha = vec![0.0; n];
    let mut curv_beta = vec![0.0; n];
    let mut expected_edges = 0.0;
    let mut expected_mutual = 0.0;
    let mut curv_gamma = 0.0;
    let mut curv_rho = 0.0;
    let mut log_norm = 0.0;
    for i in 0..n {
        let ci = c * ea[i];
        let di = c * eb[i];
        let mut row_log = 0.0;
        for j in i + 1..n {
            let fwd = ci * eb[j];
            let bwd = ea[j] * di;
            let both = r * fwd * bwd;
            let extra = fwd + bwd + both;
            let z = 1.0 + extra;
            row_log += extra.ln_1p();
            let p11 = both / z;
            let pf = (fwd + both) / z;
            let pb = (bwd + both) / z;
            let vf = pf * (1.0 - pf);
            let vb = pb * (1.0 - pb);
            grad_alpha[i] -= pf;
            grad_alpha[j] -= pb;
            grad_beta[j] -= pf;
            grad_beta[i] -= pb;
            curv_alpha[i] += vf;
            curv_alpha[j] += vb;
            curv_beta[j] += vf;
            curv_beta[i] += vb;
            expected_edges += pf + pb;
            expected_mutual += p11;
            curv_gamma += vf + vb + 2.0 * (p11 - pf * pb);
            curv_rho += p11 * (1.0 - p11);
        }
        log_norm += row_log;
    }
    let linear: f64 = p.alpha.iter().zip(&stats.out).map(|(a, d)| a * d).sum::<f64>()
        + p.beta.iter().zip(&stats.inn).map(|(b, d)| b * d).sum::<f64>()
        + p.gamma * stats.edges
        + p.rho * stats.mutual;
    Eval {
        loglik: linear - log_norm,
        grad_alpha,
        grad_beta,
        grad_gamma: stats.edges - expected_edges,
        grad_rho: stats.mutual - expected_mutual,
        curv_alpha,
        curv_beta,
        curv_gamma,
        curv_rho,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Block {
    Alpha,
    Beta,
    Gamma,
    Rho,
}

const MAX_STEP: f64 = 5.0;
const MAX_HALVINGS: usize = 40;

fn newton_direction(grad: f64, curv: f64) -> f64 {
    if curv > 1e-300 {
        (grad / curv).clamp(-MAX_STEP, MAX_STEP)
    } else {
        grad.signum() * MAX_STEP.min(grad.abs())
    }
}

fn apply(p: &Point, block: Block, dir: &[f64], t: f64) -> Point {
    let mut q = p.clone();
    match block {
        Block::Alpha => q.alpha.iter_mut().zip(dir).for_each(|(a, d)| *a += t * d),
        Block::Beta => q.beta.iter_mut().zip(dir).for_each(|(b, d)| *b += t * d),
        Block::Gamma => q.gamma += t * dir[0],
        Block::Rho => q.rho += t * dir[0],
    }
    q
}

fn max_abs(p: &Point) -> f64 {
    p.alpha
        .iter()
        .chain(&p.beta)
        .fold(p.gamma.abs().max(p.rho.abs()), |m, x| m.max(x.abs()))
}

fn recenter(p: &mut Point) {
    let n = p.alpha.len() as f64;
    let ma = p.alpha.iter().sum::<f64>() / n;
    let mb = p.beta.iter().sum::<f64>() / n;
    p.alpha.iter_mut().for_each(|a| *a -= ma);
    p.beta.iter_mut().for_each(|b| *b -= mb);
    p.gamma += ma + mb;
}

fn initial_point(stats: &Stats, rho: Option<f64>) -> Point {
    let n = stats.n as f64;
    let alpha: Vec<f64> = stats.out.iter().map(|d| ((d + 0.5) / n).ln()).collect();
    let beta: Vec<f64> = stats.inn.iter().map(|d| ((d + 0.5) / n).ln()).collect();
    let mut p = Point {
        alpha,
        beta,
        gamma: 0.0,
        rho: rho.unwrap_or(0.0),
    };
    recenter(&mut p);
    // rank-one start: P(i -> j) ≈ d_i d_j / E
    p.gamma = (p.gamma + (n * n / stats.edges.max(1.0)).ln()).clamp(-20.0, 5.0);
    p
}

/// One pass over the blocks; the likelihood does not decrease.
fn sweep(stats: &Stats, start: &Point, start_eval: &Eval, blocks: &[Block]) -> (Point, Eval) {
    let mut point = start.clone();
    let mut eval = start_eval.clone();
    for &block in blocks {
        let dir: Vec<f64> = match block {
            Block::Alpha => eval
                .grad_alpha
                .iter()
                .zip(&eval.curv_alpha)
                .map(|(&g, &h)| newton_direction(g, h))
                .collect(),
            Block::Beta => eval
                .grad_beta
                .iter()
                .zip(&eval.curv_beta)
                .map(|(&g, &h)| newton_direction(g, h))
                .collect(),
            Block::Gamma => vec![newton_direction(eval.grad_gamma, eval.curv_gamma)],
            Block::Rho => vec![newton_direction(eval.grad_rho, eval.curv_rho)],
        };
        let slack = 1e-12 * eval.loglik.abs().max(1.0);
        let mut t = 1.0;
        for _ in 0..MAX_HALVINGS {
            let trial = apply(&point, block, &dir, t);
            let trial_eval = evaluate(stats, &trial);
            if trial_eval.loglik.is_finite() && trial_eval.loglik >= eval.loglik - slack {
                point = trial;
                eval = trial_eval;
                break;
            }
            t *= 0.5;
        }
    }
    // probabilities, scores and likelihood are unchanged by the shift
    recenter(&mut point);
    debug_assert!(eval.loglik >= start_eval.loglik - 1e-9 * start_eval.loglik.abs().max(1.0));
    (point, eval)
}

fn flatten(p: &Point, rho_free: bool) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * p.alpha.len() + 2);
    v.extend_from_slice(&p.alpha);
    v.extend_from_slice(&p.beta);
    v.push(p.gamma);
    if rho_free {
        v.push(p.rho);
    }
    v
}

/// Squared-extrapolation step through three successive sweeps; the caller
/// keeps it only if it improves the likelihood.
fn extrapolate(x0: &Point, x1: &Point, x2: &Point, rho_free: bool) -> Option<Point> {
    let (a, b, c) = (flatten(x0, rho_free), flatten(x1, rho_free), flatten(x2, rho_free));
    let r: Vec<f64> = a.iter().zip(&b).map(|(a, b)| b - a).collect();
    let v: Vec<f64> = a.iter().zip(&b).zip(&c).map(|((a, b), c)| c - 2.0 * b + a).collect();
    let norm = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
    let (nr, nv) = (norm(&r), norm(&v));
    if !(nv > 0.0) || !nr.is_finite() {
        return None;
    }
    let step = (nr / nv).max(1.0);
    let x: Vec<f64> = a
        .iter()
        .zip(&r)
        .zip(&v)
        .map(|((a, r), v)| a + 2.0 * step * r + step * step * v)
        .collect();
    let n = x0.alpha.len();
    let mut p = Point {
        alpha: x[..n].to_vec(),
        beta: x[n..2 * n].to_vec(),
        gamma: x[2 * n],
        rho: if rho_free { x[2 * n + 1] } else { x0.rho },
    };
    recenter(&mut p);
    x.iter().all(|y| y.is_finite()).then_some(p)
}

/// Fits all parameters, or all but `ρ` when `fixed_rho` is given.
pub fn fit_with(g: &DirectedGraph, config: &SolverConfig, fixed_rho: Option<f64>) -> Result<MleFit> {
    let n = g.n();
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let stats = Stats {
        n,
        edges: out.iter().sum::<usize>() as f64,
        mutual: (g.edge_type_count(EdgeCode::Mutual) / 2) as f64,
        out: out.into_iter().map(|d| d as f64).collect(),
        inn: inn.into_iter().map(|d| d as f64).collect(),
    };
    let existence = existence_check(g);
    let rho_free = fixed_rho.is_none();
    let mut point = initial_point(&stats, fixed_rho);
    let mut eval = evaluate(&stats, &point);
    let mut iterations = 0;
    let mut converged = eval.max_score(rho_free) <= config.tol;
    let mut diverged = false;
    let blocks: &[Block] = if rho_free {
        &[Block::Alpha, Block::Beta, Block::Gamma, Block::Rho]
    } else {
        &[Block::Alpha, Block::Beta, Block::Gamma]
    };

    while !converged && !diverged && iterations < config.max_iter {
        let (x1, e1) = sweep(&stats, &point, &eval, blocks);
        iterations += 1;
        let done = |p: &Point, e: &Eval| max_abs(p) > config.bound || e.max_score(rho_free) <= config.tol;
        if done(&x1, &e1) || iterations == config.max_iter {
            (point, eval) = (x1, e1);
        } else {
            let (x2, e2) = sweep(&stats, &x1, &e1, blocks);
            iterations += 1;
            (point, eval) = match extrapolate(&point, &x1, &x2, rho_free) {
                Some(x3) if !done(&x2, &e2) => {
                    let e3 = evaluate(&stats, &x3);
                    if e3.loglik.is_finite() && e3.loglik >= e2.loglik {
                        (x3, e3)
                    } else {
                        (x2, e2)
                    }
                }
                _ => (x2, e2),
            };
        }
        diverged = max_abs(&point) > config.bound;
        converged = !diverged && eval.max_score(rho_free) <= config.tol;
    }

    let params_hat = ModelParams::new(point.rho, point.gamma, point.alpha.clone(), point.beta.clone()).ok();
    Ok(MleFit {
        params_hat,
        max_abs_param: max_abs(&point),
        rho: point.rho,
        gamma: point.gamma,
        alpha: point.alpha,
        beta: point.beta,
        converged,
        diverged,
        iterations,
        log_likelihood: eval.loglik,
        gradient_norm: eval.max_score(rho_free),
        existence,
    })
}

/// Unrestricted fit.
pub fn fit(g: &DirectedGraph, config: &SolverConfig) -> Result<MleFit> {
    fit_with(g, config, None)
}

/// Exact dyad-factorized log-likelihood of `params` for `g`.
pub fn log_likelihood(g: &DirectedGraph, params: &ModelParams) -> f64 {
    log_likelihood_at(g, params.rho(), params.gamma(), params.alpha(), params.beta())
}

/// Log-likelihood at raw, possibly uncentered, values.
pub fn log_likelihood_at(g: &DirectedGraph, rho: f64, gamma: f64, alpha: &[f64], beta: &[f64]) -> f64 {
    let out = g.out_degrees();
    let inn = g.in_degrees();
    let stats = Stats {
        n: g.n(),
        edges: out.iter().sum::<usize>() as f64,
        mutual: (g.edge_type_count(EdgeCode::Mutual) / 2) as f64,
        out: out.into_iter().map(|d| d as f64).collect(),
        inn: inn.into_iter().map(|d| d as f64).collect(),
    };
    let p = Point {
        alpha: alpha.to_vec(),
        beta: beta.to_vec(),
        gamma,
        rho,
    };
    evaluate(&stats, &p).loglik
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrtStatus {
    Ok,
    /// One of the two fits did not converge.
    FitFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtResult {
    pub statistic: Option<f64>,
    /// Upper tail of `χ²₁`; the reference law is conjectured, not proven.
    pub p_value: Option<f64>,
    pub reference_is_conjectural: bool,
    pub status: LrtStatus,
    pub full_loglik: f64,
    pub null_loglik: f64,
}

/// Likelihood-ratio test of `ρ = 0`.
pub fn lrt(g: &DirectedGraph, config: &SolverConfig) -> Result<LrtResult> {
    let full = fit_with(g, config, None)?;
    let null = fit_with(g, config, Some(0.0))?;
    let ok = full.converged && null.converged;
    let statistic = ok.then(|| (2.0 * (full.log_likelihood - null.log_likelihood)).max(0.0));
    Ok(LrtResult {
        statistic,
        p_value: statistic.map(chi2_1_upper_tail),
        reference_is_conjectural: true,
        status: if ok { LrtStatus::Ok } else { LrtStatus::FitFailed },
        full_loglik: full.log_likelihood,
        null_loglik: null.log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::draw_heterogeneity;

    #[test]
    fn empty_graph_flags_every_node() {
        let r = existence_check(&DirectedGraph::empty(5));
        assert!(r.flagged.iter().all(|&f| f));
        assert_eq!(r.verdict, ExistenceVerdict::DefinitelyNonexistent);
    }

    #[test]
    fn sink_node_is_flagged() {
        let (g, _) = DirectedGraph::from_edge_list(&[(1, 0), (1, 2), (2, 1), (2, 0)], 4).unwrap();
        let r = existence_check(&g);
        assert!(r.flagged[0]);
    }

    #[test]
    fn boundary_graph_diverges() {
        let (g, _) = DirectedGraph::from_edge_list(&[(1, 0), (1, 2), (2, 1), (2, 0), (3, 1)], 4).unwrap();
        let f = fit(&g, &SolverConfig::default()).unwrap();
        assert!(!f.converged);
        assert_eq!(f.existence.verdict, ExistenceVerdict::DefinitelyNonexistent);
    }

    #[test]
    fn recovers_parameters_on_dense_sample() {
        let (a, b) = draw_heterogeneity(150, 1);
        let truth = ModelParams::new(0.5, -1.0, a, b).unwrap();
        let g = truth.sample(2);
        let f = fit(&g, &SolverConfig::default()).unwrap();
        assert!(f.converged, "{} iterations, score {}", f.iterations, f.gradient_norm);
        assert!((f.rho - 0.5).abs() < 0.3, "rho = {}", f.rho);
        assert!(f.gradient_norm <= 1e-8);
        let p = f.params_hat.unwrap();
        assert!((log_likelihood(&g, &p) - f.log_likelihood).abs() < 1e-6);
    }

    #[test]
    fn likelihood_is_shift_invariant() {
        let (a, b) = draw_heterogeneity(30, 4);
        let p = ModelParams::new(0.2, -1.0, a, b).unwrap();
        let g = p.sample(1);
        let shifted: Vec<f64> = p.alpha().iter().map(|x| x + 0.7).collect();
        let moved = log_likelihood_at(&g, 0.2, p.gamma() - 0.7, &shifted, p.beta());
        assert!((log_likelihood(&g, &p) - moved).abs() < 1e-9);
    }
}
