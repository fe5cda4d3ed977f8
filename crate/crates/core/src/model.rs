//! The p1 model: parameters, derived weights, dyad probabilities, samplers.
//!
//! Each unordered pair `{i, j}` is independent, with
//! `P(A_ij = a, A_ji = b) ∝ exp(a(γ+α_i+β_j) + b(γ+α_j+β_i) + abρ)`.
//! Writing `μ_i = e^{γ/2+α_i}`, `ν_i = e^{γ/2+β_i}` and `η_i = μ_i ν_i`, the
//! four unnormalized weights are `1`, `μ_i ν_j`, `μ_j ν_i` and `e^ρ η_i η_j`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LcrError, Result};
use crate::graph::{DirectedGraph, EdgeCode};
use crate::rng::{generator, DyadStream};

/// Largest accepted magnitude of any parameter.
pub const PARAM_BOUND: f64 = 50.0;

/// Parameters `(ρ, γ, α, β)` with `Σα = Σβ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    rho: f64,
    gamma: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    shift: (f64, f64),
}

fn check_finite_bounded(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(LcrError::domain(format!("{name} is not finite")));
    }
    if x.abs() > PARAM_BOUND {
        return Err(LcrError::domain(format!(
            "{name} = {x} exceeds the supported magnitude {PARAM_BOUND}"
        )));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl ModelParams {
    /// Builds centered parameters.
    ///
    /// Uncentered `alpha`/`beta` are shifted to mean zero and the removed
    /// means are added to `gamma`, which leaves every dyad probability
    /// unchanged. The shift is kept in [`ModelParams::applied_shift`].
    pub fn new(rho: f64, gamma: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let n = alpha.len();
        if n < 3 {
            return Err(LcrError::domain(format!("need at least 3 nodes, got {n}")));
        }
        if beta.len() != n {
            return Err(LcrError::domain(format!(
                "alpha has {n} entries but beta has {}",
                beta.len()
            )));
        }
        for (k, &x) in alpha.iter().chain(&beta).enumerate() {
            if !x.is_finite() {
                return Err(LcrError::domain(format!("heterogeneity entry {k} is not finite")));
            }
        }
        let (ma, mb) = (mean(&alpha), mean(&beta));
        let alpha: Vec<f64> = alpha.into_iter().map(|a| a - ma).collect();
        let beta: Vec<f64> = beta.into_iter().map(|b| b - mb).collect();
        let gamma = gamma + ma + mb;
        check_finite_bounded("rho", rho)?;
        check_finite_bounded("gamma", gamma)?;
        for (i, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            check_finite_bounded(&format!("alpha[{i}]"), a)?;
            check_finite_bounded(&format!("beta[{i}]"), b)?;
        }
        Ok(ModelParams {
            rho,
            gamma,
            alpha,
            beta,
            shift: (ma, mb),
        })
    }

    /// All nodes alike: `α = β = 0`.
    pub fn homogeneous(n: usize, rho: f64, gamma: f64) -> Result<Self> {
        Self::new(rho, gamma, vec![0.0; n], vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Means removed from `(alpha, beta)` at construction.
    pub fn applied_shift(&self) -> (f64, f64) {
        self.shift
    }

    /// The same parameters with another `ρ`.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        check_finite_bounded("rho", rho)?;
        Ok(ModelParams { rho, ..self.clone() })
    }

    pub fn plr(&self) -> PlrQuantities {
        let half = self.gamma / 2.0;
        let mu: Vec<f64> = self.alpha.iter().map(|a| (half + a).exp()).collect();
        let nu: Vec<f64> = self.beta.iter().map(|b| (half + b).exp()).collect();
        let eta = mu.iter().zip(&nu).map(|(m, v)| m * v).collect();
        PlrQuantities { mu, nu, eta }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        check_pair(self.n(), i, j)
    }

    /// Exact joint law of `(A_ij, A_ji)`, evaluated in log space.
    pub fn dyad_distribution(&self, i: usize, j: usize) -> Result<DyadDistribution> {
        self.check_pair(i, j)?;
        let fwd = self.gamma + self.alpha[i] + self.beta[j];
        let bwd = self.gamma + self.alpha[j] + self.beta[i];
        Ok(DyadDistribution::from_log_weights([
            0.0,
            fwd,
            bwd,
            fwd + bwd + self.rho,
        ]))
    }

    /// Draws one graph; see [`crate::rng`] for the stream layout.
    pub fn sample(&self, seed: u64) -> DirectedGraph {
        sample_tilted(self, seed, |_, _| 1.0)
    }

    /// Expected number of directed edges divided by `n(n-1)`.
    pub fn expected_density(&self) -> f64 {
        let plr = self.plr();
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += plr.omega_unchecked(self.rho, EdgeCode::Forward, i, j)
                        + plr.omega_unchecked(self.rho, EdgeCode::Mutual, i, j);
                }
            }
        }
        total / (n * (n - 1)) as f64
    }
}

pub(crate) fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i >= n || j >= n {
        return Err(LcrError::domain(format!("node pair ({i}, {j}) out of range for n = {n}")));
    }
    if i == j {
        return Err(LcrError::domain(format!("pair ({i}, {i}) is a self-pair")));
    }
    Ok(())
}

/// The vectors `μ`, `ν`, `η = μ∘ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlrQuantities {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PlrQuantities {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    /// Unnormalized weight of type `code` for the ordered pair `(i, j)`.
    pub fn omega_tilde(&self, rho: f64, code: EdgeCode, i: usize, j: usize) -> Result<f64> {
        check_pair(self.n(), i, j)?;
        Ok(self.omega_tilde_unchecked(rho, code, i, j))
    }

    /// Probability that the ordered pair `(i, j)` has type `code`.
    pub fn omega(&self, rho: f64, code: EdgeCode, i: usize, j: usize) -> Result<f64> {
        check_pair(self.n(), i, j)?;
        Ok(self.omega_unchecked(rho, code, i, j))
    }

    #[inline]
    pub(crate) fn omega_tilde_unchecked(&self, rho: f64, code: EdgeCode, i: usize, j: usize) -> f64 {
        match code {
            EdgeCode::Null => 1.0,
            EdgeCode::Forward => self.mu[i] * self.nu[j],
            EdgeCode::Backward => self.mu[j] * self.nu[i],
            EdgeCode::Mutual => rho.exp() * self.eta[i] * self.eta[j],
        }
    }

    #[inline]
    pub(crate) fn omega_unchecked(&self, rho: f64, code: EdgeCode, i: usize, j: usize) -> f64 {
        let z = 1.0
            + self.mu[i] * self.nu[j]
            + self.mu[j] * self.nu[i]
            + rho.exp() * self.eta[i] * self.eta[j];
        self.omega_tilde_unchecked(rho, code, i, j) / z
    }

    /// `‖v‖₁` for a positive vector.
    pub fn l1(v: &[f64]) -> f64 {
        v.iter().sum()
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// Probabilities of `(A_ij, A_ji) = (0,0), (1,0), (0,1), (1,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadDistribution {
    pub p00: f64,
    pub p10: f64,
    pub p01: f64,
    pub p11: f64,
}

impl DyadDistribution {
    /// Softmax of log-weights in the order `00, 10, 01, 11`.
    pub fn from_log_weights(w: [f64; 4]) -> Self {
        let m = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = w.map(|x| (x - m).exp());
        let z: f64 = e.iter().sum();
        DyadDistribution {
            p00: e[0] / z,
            p10: e[1] / z,
            p01: e[2] / z,
            p11: e[3] / z,
        }
    }

    pub fn get(&self, code: EdgeCode) -> f64 {
        match code {
            EdgeCode::Null => self.p00,
            EdgeCode::Forward => self.p10,
            EdgeCode::Backward => self.p01,
            EdgeCode::Mutual => self.p11,
        }
    }

    /// The law seen from `(j, i)`.
    pub fn swapped(&self) -> Self {
        DyadDistribution {
            p10: self.p01,
            p01: self.p10,
            ..*self
        }
    }
}

/// Two-community variant: pairs inside one community get an extra
/// `θ` on each directed exponent (so `2θ` on the mutual one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecParams {
    pub base: ModelParams,
    pub theta: f64,
    pub community: Vec<u8>,
}

impl MisspecParams {
    /// `community = None` splits nodes in half by index: the first
    /// `n / 2` get label 0, the rest label 1.
    pub fn new(base: ModelParams, theta: f64, community: Option<Vec<u8>>) -> Result<Self> {
        check_finite_bounded("theta", theta)?;
        let n = base.n();
        let community = community.unwrap_or_else(|| (0..n).map(|i| u8::from(i >= n / 2)).collect());
        if community.len() != n {
            return Err(LcrError::domain(format!(
                "community has {} labels for {n} nodes",
                community.len()
            )));
        }
        if let Some(bad) = community.iter().find(|&&c| c > 1) {
            return Err(LcrError::domain(format!("community label {bad} is not 0 or 1")));
        }
        if theta != 0.0 && !(community.contains(&0) && community.contains(&1)) {
            log::warn!("misspecification with a single community: theta acts as a shift of gamma");
        }
        Ok(MisspecParams {
            base,
            theta,
            community,
        })
    }

    /// Exact joint law of `(A_ij, A_ji)` under the tilted kernel.
    pub fn dyad_distribution(&self, i: usize, j: usize) -> Result<DyadDistribution> {
        let b = &self.base;
        b.check_pair(i, j)?;
        let t = if self.community[i] == self.community[j] {
            self.theta
        } else {
            0.0
        };
        let fwd = b.gamma + b.alpha[i] + b.beta[j] + t;
        let bwd = b.gamma + b.alpha[j] + b.beta[i] + t;
        Ok(DyadDistribution::from_log_weights([0.0, fwd, bwd, fwd + bwd + b.rho]))
    }

    /// Draws one graph. With `theta == 0` the output is identical to
    /// [`ModelParams::sample`] for the same seed.
    pub fn sample(&self, seed: u64) -> DirectedGraph {
        let tilt = self.theta.exp();
        let community = &self.community;
        sample_tilted(&self.base, seed, |i, j| {
            if community[i] == community[j] {
                tilt
            } else {
                1.0
            }
        })
    }
}

/// Shared sampler. `tilt(i, j)` multiplies both one-way weights and its
/// square multiplies the mutual weight.
fn sample_tilted<F>(params: &ModelParams, seed: u64, tilt: F) -> DirectedGraph
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let n = params.n();
    let plr = params.plr();
    let e_rho = params.rho.exp();
    let base = generator(seed);
    let rows: Vec<Vec<(usize, usize, EdgeCode)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut stream = DyadStream::for_row(&base, n, i);
            let mut out = Vec::new();
            for j in i + 1..n {
                let u = stream.next_unit();
                let t = tilt(i, j);
                let w10 = plr.mu[i] * plr.nu[j] * t;
                let w01 = plr.mu[j] * plr.nu[i] * t;
                let w11 = e_rho * plr.eta[i] * plr.eta[j] * (t * t);
                let x = u * (1.0 + w10 + w01 + w11);
                let code = if x < 1.0 {
                    continue;
                } else if x < 1.0 + w10 {
                    EdgeCode::Forward
                } else if x < 1.0 + w10 + w01 {
                    EdgeCode::Backward
                } else {
                    EdgeCode::Mutual
                };
                out.push((i, j, code));
            }
            out
        })
        .collect();
    DirectedGraph::from_dyad_states(n, rows.concat()).expect("sampled dyads are well formed")
}

/// Experiment-style heterogeneity: `α ~ N(0, 1)`, `β ~ U(-1, 1)`, each
/// then centered to mean zero.
pub fn draw_heterogeneity(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal, Uniform};
    let mut rng = generator(seed);
    let alpha: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let unif = Uniform::new(-1.0, 1.0).expect("valid range");
    let beta: Vec<f64> = (0..n).map(|_| rng.sample(unif)).collect();
    let center = |v: Vec<f64>| {
        let m = if v.is_empty() { 0.0 } else { mean(&v) };
        v.into_iter().map(|x| x - m).collect()
    };
    (center(alpha), center(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn null_parameters_give_uniform_dyads() {
        let p = ModelParams::homogeneous(4, 0.0, 0.0).unwrap();
        let d = p.dyad_distribution(0, 3).unwrap();
        for c in EdgeCode::ALL {
            assert_relative_eq!(d.get(c), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn plr_substitution() {
        let mut alpha = vec![0.0; 3];
        alpha[0] = 1.0;
        alpha[1] = -1.0;
        let p = ModelParams::new(0.0, -2.0, alpha, vec![0.0; 3]).unwrap();
        let q = p.plr();
        assert_relative_eq!(q.mu[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(q.nu[0], (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(q.eta[0], (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn omega_tilde_forward_example() {
        let q = PlrQuantities {
            mu: vec![2.0, 3.0],
            nu: vec![5.0, 7.0],
            eta: vec![10.0, 21.0],
        };
        assert_eq!(q.omega_tilde(0.0, EdgeCode::Forward, 0, 1).unwrap(), 14.0);
        assert_eq!(q.omega_tilde(0.0, EdgeCode::Null, 0, 1).unwrap(), 1.0);
        assert!(q.omega_tilde(0.0, EdgeCode::Null, 1, 1).is_err());
    }

    #[test]
    fn recentering_moves_means_into_gamma() {
        let p = ModelParams::new(0.3, -1.0, vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 3.0]).unwrap();
        assert_relative_eq!(p.gamma(), -1.0 + 2.0 + 1.0, epsilon = 1e-14);
        assert_eq!(p.applied_shift(), (2.0, 1.0));
        assert!(p.alpha().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn out_of_range_parameters_are_rejected() {
        assert!(ModelParams::homogeneous(3, 51.0, 0.0).is_err());
        assert!(ModelParams::homogeneous(3, f64::NAN, 0.0).is_err());
        assert!(ModelParams::homogeneous(2, 0.0, 0.0).is_err());
        let p = ModelParams::homogeneous(3, 0.0, 0.0).unwrap();
        assert!(p.dyad_distribution(1, 1).is_err());
        assert!(p.dyad_distribution(0, 3).is_err());
    }

    #[test]
    fn extreme_densities() {
        let full = ModelParams::homogeneous(30, 50.0, 50.0).unwrap().sample(1);
        assert_eq!(full.edge_type_count(EdgeCode::Mutual), 30 * 29);
        let empty = ModelParams::homogeneous(30, 0.0, -50.0).unwrap().sample(1);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn zero_theta_matches_plain_sampler() {
        let (a, b) = draw_heterogeneity(60, 3);
        let p = ModelParams::new(0.5, -1.5, a, b).unwrap();
        let m = MisspecParams::new(p.clone(), 0.0, None).unwrap();
        assert_eq!(m.sample(11).to_edge_list(), p.sample(11).to_edge_list());
    }

    #[test]
    fn single_community_tilt_fills_graph() {
        let p = ModelParams::homogeneous(20, 0.0, 0.0).unwrap();
        let m = MisspecParams::new(p, 50.0, Some(vec![0; 20])).unwrap();
        assert_eq!(m.sample(5).edge_type_count(EdgeCode::Mutual), 20 * 19);
    }

    #[test]
    fn default_split_is_half_by_index() {
        let p = ModelParams::homogeneous(5, 0.0, 0.0).unwrap();
        let m = MisspecParams::new(p, 0.2, None).unwrap();
        assert_eq!(m.community, vec![0, 0, 1, 1, 1]);
    }
}
