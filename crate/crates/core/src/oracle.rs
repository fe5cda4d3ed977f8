//! Self-checks against slow exact references.
//!
//! Every check compares a fast routine with an independent definition on
//! small seeded inputs. A [`Fault`] can be injected into the fast counter to
//! confirm the comparison notices a broken implementation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cycles::{
    brute_force_count, expected_count, fast_count_with_fault, pair_search, CancellationPair, CyclePattern, Fault,
};
use crate::error::Result;
use crate::graph::{DirectedGraph, EdgeCode};
use crate::inference::rst_hat;
use crate::model::ModelParams;
use crate::rng::{derive_seed, generator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectedFault {
    #[default]
    None,
    NullDiagonal,
    RepeatedNodes,
}

impl InjectedFault {
    fn fault(self) -> Fault {
        match self {
            InjectedFault::None => Fault::None,
            InjectedFault::NullDiagonal => Fault::KeepNullDiagonal,
            InjectedFault::RepeatedNodes => Fault::KeepRepeatedNodes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub seed: u64,
    /// Random graphs for the count comparison.
    pub graphs: usize,
    /// Random parameter draws for the ratio identity.
    pub ratio_trials: usize,
    pub fault: InjectedFault,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 0,
            graphs: 200,
            ratio_trials: 50,
            fault: InjectedFault::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random parameters with `n ∈ 8..=14` spread over sparse and dense regimes.
fn small_params(seed: u64) -> Result<ModelParams> {
    let mut rng = generator(seed);
    let n = rng.random_range(8..=14);
    let rho = rng.random_range(-1.5..2.0);
    let gamma = rng.random_range(-2.5..0.5);
    let scale = rng.random_range(0.0..1.0);
    let alpha = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    let beta = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
    ModelParams::new(rho, gamma, alpha, beta)
}

fn small_graph(master: u64, k: usize) -> Result<DirectedGraph> {
    let seed = derive_seed(master, 0, k as u64);
    Ok(small_params(seed)?.sample(derive_seed(seed, 1, 0)))
}

fn check(name: &str, failures: Vec<String>, total: usize, what: &str) -> OracleCheck {
    let detail = match failures.first() {
        None => format!("{total} {what} agree"),
        Some(first) => format!("{} of {total} {what} disagree; first: {first}", failures.len()),
    };
    OracleCheck {
        name: name.to_owned(),
        passed: failures.is_empty(),
        detail,
    }
}

/// Graphs on which every length-4 pattern is compared, not just the pairs.
const FULL_SWEEP_GRAPHS: usize = 10;

fn fast_vs_brute(config: &OracleConfig) -> Result<OracleCheck> {
    let pairs = CancellationPair::quadrilaterals();
    let pair_patterns: Vec<CyclePattern> = pairs.iter().flat_map(|p| [p.a.clone(), p.b.clone()]).collect();
    let all_patterns: Vec<CyclePattern> = (0..256).map(|idx| CyclePattern::from_index(4, idx)).collect();
    let mut failures = Vec::new();
    let mut total = 0;
    for k in 0..config.graphs {
        let g = small_graph(config.seed, k)?;
        let patterns = if k < FULL_SWEEP_GRAPHS { &all_patterns } else { &pair_patterns };
        for pattern in patterns {
            total += 1;
            let fast = fast_count_with_fault(&g, pattern, config.fault.fault())?;
            let slow = brute_force_count(&g, pattern)?;
            if fast != slow {
                failures.push(format!("graph {k} (n = {}), {pattern}: {fast} vs {slow}", g.n()));
            }
        }
    }
    Ok(check("fast_count_matches_brute_force", failures, total, "counts"))
}

fn ratio_identity(config: &OracleConfig) -> Result<OracleCheck> {
    let pairs = CancellationPair::quadrilaterals();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..config.ratio_trials {
        let params = small_params(derive_seed(config.seed, 1, k as u64))?;
        for (p, pair) in pairs.iter().enumerate() {
            let ratio = expected_count(&params, &pair.a)? / expected_count(&params, &pair.b)?;
            let target = (f64::from(pair.c0) * params.rho()).exp();
            let rel = (ratio / target - 1.0).abs();
            worst = worst.max(rel);
            if !(rel <= 1e-10) {
                failures.push(format!("draw {k}, pair {}: relative error {rel:.3e}", p + 1));
            }
        }
    }
    let mut c = check(
        "expected_count_ratio_identity",
        failures,
        config.ratio_trials * pairs.len(),
        "ratios",
    );
    c.detail.push_str(&format!(" (largest relative error {worst:.2e})"));
    Ok(c)
}

fn search_structure() -> Result<OracleCheck> {
    let mut problems = Vec::new();
    for m in [3, 5, 7] {
        let found = pair_search(m)?.len();
        if found != 0 {
            problems.push(format!("length {m} has {found} classes"));
        }
    }
    let classes = pair_search(4)?;
    if classes.len() != 3 {
        problems.push(format!("length 4 has {} classes, expected 3", classes.len()));
    }
    let default = crate::cycles::canonical_pair(&CancellationPair::default_pair());
    if !classes.iter().any(|c| c.pair == default && c.pair.c0 == 1) {
        problems.push("default pair is not among the length-4 classes".to_owned());
    }
    if !classes.iter().any(|c| c.pair.c0 == 2) {
        problems.push("no length-4 class with exponent 2".to_owned());
    }
    let detail = if problems.is_empty() {
        "odd lengths empty; length 4 has 3 classes with exponents ".to_owned()
            + &classes.iter().map(|c| c.pair.c0.to_string()).collect::<Vec<_>>().join(", ")
    } else {
        problems.join("; ")
    };
    Ok(OracleCheck {
        name: "pair_search_structure".to_owned(),
        passed: problems.is_empty(),
        detail,
    })
}

/// `(r̂, ŝ, t̂)` from their defining double sums.
fn rst_literal(g: &DirectedGraph, i: usize, j: usize) -> (i64, i64, i64) {
    let n = g.n();
    let a = |c: EdgeCode, u: usize, v: usize| i64::from(u != v && g.code(u, v) == c);
    let (mut r, mut s, mut t) = (0, 0, 0);
    for k in (0..n).filter(|&k| k != i && k != j) {
        for l in (0..n).filter(|&l| l != i && l != j && l != k) {
            r += a(EdgeCode::Backward, k, l);
            s += a(EdgeCode::Mutual, k, l);
            t += a(EdgeCode::Forward, j, k) * a(EdgeCode::Forward, k, l)
                + a(EdgeCode::Forward, k, l) * a(EdgeCode::Forward, l, i)
                + a(EdgeCode::Forward, j, k) * a(EdgeCode::Forward, l, i);
        }
    }
    (r, s, t)
}

fn plugin_sums(config: &OracleConfig) -> Result<OracleCheck> {
    let graphs = config.graphs.min(40);
    let mut failures = Vec::new();
    let mut total = 0;
    for k in 0..graphs {
        let g = small_graph(config.seed, k)?;
        for i in 0..g.n() {
            for j in (0..g.n()).filter(|&j| j != i) {
                total += 1;
                let fast = rst_hat(&g, i, j)?;
                let slow = rst_literal(&g, i, j);
                if fast != slow {
                    failures.push(format!("graph {k}, pair ({i}, {j}): {fast:?} vs {slow:?}"));
                }
            }
        }
    }
    Ok(check("plugin_sums_match_literal", failures, total, "node pairs"))
}

/// Runs every check; errors only on invalid configuration.
pub fn run_oracle_suite(config: &OracleConfig) -> Result<OracleReport> {
    Ok(OracleReport {
        checks: vec![
            fast_vs_brute(config)?,
            ratio_identity(config)?,
            search_structure()?,
            plugin_sums(config)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(fault: InjectedFault) -> OracleReport {
        run_oracle_suite(&OracleConfig {
            seed: 3,
            graphs: 12,
            ratio_trials: 4,
            fault,
        })
        .unwrap()
    }

    #[test]
    fn clean_suite_passes() {
        let r = quick(InjectedFault::None);
        assert!(r.passed(), "{:#?}", r.checks);
        assert_eq!(r.checks.len(), 4);
    }

    #[test]
    fn injected_faults_are_caught() {
        for fault in [InjectedFault::NullDiagonal, InjectedFault::RepeatedNodes] {
            let r = quick(fault);
            assert!(!r.checks[0].passed, "{fault:?}");
            assert!(r.checks[1..].iter().all(|c| c.passed));
        }
    }
}
