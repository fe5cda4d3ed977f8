//! Population quantities computed from known parameters.
//!
//! The exact mode forms the four `n × n` type-probability matrices (zero
//! diagonal) and evaluates the variance functional and the expected
//! numerator count with dense matrix products, then removes the terms with
//! repeated indices. It costs `O(n³)` time and `O(n²)` memory, so above
//! [`TheoryConfig::exact_max_n`] only the closed-form leading terms are
//! reported.

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::cycles::CyclePattern;
use crate::error::{LcrError, Result};
use crate::graph::EdgeCode;
use crate::model::{ModelParams, PlrQuantities};

/// Margins that turn asymptotic conditions into finite-sample flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConfig {
    /// Quantities that should vanish must be below this.
    pub small: f64,
    /// Quantities that should diverge must be above this.
    pub large: f64,
    /// Accepted range of `‖μ‖₁/‖ν‖₁` in the large-reciprocity regime.
    pub balance_band: (f64, f64),
    /// `e^ρ` within this factor of `e^ρ̃` counts as comparable.
    pub regime_margin: f64,
    pub exact_max_n: usize,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig {
            small: 0.2,
            large: 5.0,
            balance_band: (1.0 / 3.0, 3.0),
            regime_margin: 5.0,
            exact_max_n: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `e^ρ` well below `e^ρ̃`.
    S,
    /// Comparable.
    L1,
    /// Well above.
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryMode {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryDiagnostics {
    pub mode: TheoryMode,
    /// Variance functional of the centered count difference.
    pub v_exact: f64,
    /// `E[Q(a)]` for the default numerator pattern.
    pub expected_qa: f64,
    /// `expected_qa / √v_exact`.
    pub snr_exact: f64,
    /// Leading-order variance.
    pub v_asymptotic: f64,
    /// Leading-order `E[Q(a)]`: `e^ρ ‖η‖₁² ‖μ‖₁ ‖ν‖₁`.
    pub expected_qa_asymptotic: f64,
    pub r_n: f64,
    pub r_n_minus: f64,
    pub rho_tilde: f64,
    pub c_mu_nu_eta: f64,
    pub regime: Regime,
    pub g1_ok: bool,
    pub g2_ok: bool,
    pub sp1_ok: bool,
    /// Only assessed outside regime S.
    pub sp2_ok: Option<bool>,
}

struct Norms {
    mu: f64,
    nu: f64,
    eta: f64,
    mu_eta: f64,
    nu_eta: f64,
}

impl Norms {
    fn of(plr: &PlrQuantities) -> Self {
        Norms {
            mu: PlrQuantities::l1(&plr.mu),
            nu: PlrQuantities::l1(&plr.nu),
            eta: PlrQuantities::l1(&plr.eta),
            mu_eta: PlrQuantities::dot(&plr.mu, &plr.eta),
            nu_eta: PlrQuantities::dot(&plr.nu, &plr.eta),
        }
    }
}

/// Leading-order variance of the centered count difference.
pub fn asymptotic_variance(params: &ModelParams) -> f64 {
    let nm = Norms::of(&params.plr());
    let e1 = params.rho().exp();
    let e2 = e1 * e1;
    let (m, v, h) = (nm.mu, nm.nu, nm.eta);
    2.0 * e1 * h * h * m * m * v * v
        + e2 * nm.mu_eta * nm.nu_eta * m * m * v * v
        + 3.0 * e2 * nm.mu_eta * h * h * m * v * v
        + 3.0 * e2 * nm.nu_eta * h * h * m * m * v
        - 3.0 * e2 * h.powi(4) * m * v
}

/// Dense type-probability matrices with zero diagonal.
pub struct OmegaMatrices {
    pub null: Array2<f64>,
    pub forward: Array2<f64>,
    pub backward: Array2<f64>,
    pub mutual: Array2<f64>,
}

impl OmegaMatrices {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.n();
        let plr = params.plr();
        let e_rho = params.rho().exp();
        let mut null = Array2::zeros((n, n));
        let mut forward = Array2::zeros((n, n));
        let mut mutual = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let f = plr.mu[i] * plr.nu[j];
                let b = plr.mu[j] * plr.nu[i];
                let m = e_rho * plr.eta[i] * plr.eta[j];
                let z = 1.0 + f + b + m;
                null[[i, j]] = 1.0 / z;
                forward[[i, j]] = f / z;
                mutual[[i, j]] = m / z;
            }
        }
        let backward = forward.t().to_owned();
        OmegaMatrices {
            null,
            forward,
            backward,
            mutual,
        }
    }

    pub fn get(&self, code: EdgeCode) -> &Array2<f64> {
        match code {
            EdgeCode::Null => &self.null,
            EdgeCode::Forward => &self.forward,
            EdgeCode::Backward => &self.backward,
            EdgeCode::Mutual => &self.mutual,
        }
    }

    /// `Σ_{distinct i,j,k,l} M1_ij M2_jk M3_kl M4_li`: the expected count of a
    /// length-4 pattern.
    pub fn expected_quadrilateral(&self, pattern: &CyclePattern) -> Result<f64> {
        let c = pattern.codes();
        if c.len() != 4 {
            return Err(LcrError::domain("expected quadrilateral count needs a length-4 pattern"));
        }
        let (m1, m2, m3, m4) = (self.get(c[0]), self.get(c[1]), self.get(c[2]), self.get(c[3]));
        let left = m1.dot(m2);
        let right = m3.dot(m4);
        let trace: f64 = Zip::from(&left).and(&right.t()).fold(0.0, |acc, a, b| acc + a * b);
        let row_pair = |p: &Array2<f64>, q: &Array2<f64>| -> Array1<f64> {
            (p * &q.t()).sum_axis(ndarray::Axis(1))
        };
        // i = k: (M1∘M2ᵀ)1 · (M3∘M4ᵀ)1; j = l: (M2∘M3ᵀ)1 · (M4∘M1ᵀ)1
        let same_ik = row_pair(m1, m2).dot(&row_pair(m3, m4));
        let same_jl = row_pair(m2, m3).dot(&row_pair(m4, m1));
        let both: f64 = Zip::from(m1)
            .and(&m2.t())
            .and(m3)
            .and(&m4.t())
            .fold(0.0, |acc, a, b, c, d| acc + a * b * c * d);
        Ok(trace - same_ik - same_jl + both)
    }

    /// `Σ_{k,l ∉ {i,j}, k≠l} L_jk M_kl R_li` for every ordered pair, as a
    /// matrix indexed `[i, j]`.
    pub fn chain_excluding_ends(l: &Array2<f64>, m: &Array2<f64>, r: &Array2<f64>) -> Array2<f64> {
        let lm = l.dot(m);
        let full = lm.dot(r); // [j, i]
        let mr_diag: Array1<f64> = (m * &r.t()).sum_axis(ndarray::Axis(1));
        let lm_diag: Array1<f64> = lm.diag().to_owned();
        let n = l.nrows();
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                out[[i, j]] = full[[j, i]] - l[[j, i]] * mr_diag[i] - r[[j, i]] * lm_diag[j]
                    + l[[j, i]] * m[[i, j]] * r[[j, i]];
            }
        }
        out
    }

    /// `Σ_{i≠j} [2 r² Ω^11 + (s − e^ρ t)² Ω^10]`.
    pub fn variance_functional(&self, rho: f64) -> f64 {
        let r = Self::chain_excluding_ends(&self.null, &self.backward, &self.null);
        let s = Self::chain_excluding_ends(&self.null, &self.mutual, &self.null);
        let t = Self::chain_excluding_ends(&self.forward, &self.forward, &self.null)
            + Self::chain_excluding_ends(&self.null, &self.forward, &self.forward)
            + Self::chain_excluding_ends(&self.forward, &self.null, &self.forward);
        let e_rho = rho.exp();
        Zip::from(&r)
            .and(&s)
            .and(&t)
            .and(&self.mutual)
            .and(&self.forward)
            .fold(0.0, |acc, &r, &s, &t, &m, &f| {
                let d = s - e_rho * t;
                acc + 2.0 * r * r * m + d * d * f
            })
    }
}

/// Population diagnostics for `params`.
pub fn theory_diagnostics(params: &ModelParams, config: &TheoryConfig) -> Result<TheoryDiagnostics> {
    let n = params.n();
    let plr = params.plr();
    let nm = Norms::of(&plr);
    let rho = params.rho();
    let e_rho = rho.exp();

    let v_asymptotic = asymptotic_variance(params);
    let expected_qa_asymptotic = e_rho * nm.eta * nm.eta * nm.mu * nm.nu;
    let (mode, v_exact, expected_qa) = if n <= config.exact_max_n {
        let omega = OmegaMatrices::new(params);
        let qa = omega.expected_quadrilateral(&crate::cycles::CancellationPair::default_pair().a)?;
        (TheoryMode::Exact, omega.variance_functional(rho), qa)
    } else {
        log::info!("n = {n} above the exact limit {}; using leading-order terms", config.exact_max_n);
        (TheoryMode::Asymptotic, v_asymptotic, expected_qa_asymptotic)
    };

    let rho_tilde = (nm.eta * nm.eta / (nm.mu_eta * nm.nu_eta)).ln();
    let small_rho_rate = 1.0 / (e_rho * nm.eta * nm.eta);
    let large_rho_rate = nm.mu_eta * nm.nu_eta / nm.eta.powi(4);
    let regime = if e_rho <= rho_tilde.exp() / config.regime_margin {
        Regime::S
    } else if e_rho >= config.regime_margin * rho_tilde.exp() {
        Regime::L2
    } else {
        Regime::L1
    };
    let r_n_minus = match regime {
        Regime::S => small_rho_rate,
        _ => 1.0 / (nm.mu * nm.nu),
    };

    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (mu_max, nu_max, eta_max) = (max(&plr.mu), max(&plr.nu), max(&plr.eta));
    let root = (rho / 2.0).exp();
    let g1_ok = mu_max < config.small && nu_max < config.small && root * eta_max < config.small;
    let g2_ok = root * nm.eta > config.large && nm.eta > config.large;
    let sp1_ok = (mu_max * nu_max).powi(2) / (nm.mu_eta * nm.nu_eta) < config.small;
    let sp2_ok = (regime != Regime::S).then(|| {
        let ratio = nm.mu / nm.nu;
        ratio >= config.balance_band.0 && ratio <= config.balance_band.1
    });

    Ok(TheoryDiagnostics {
        mode,
        v_exact,
        expected_qa,
        snr_exact: expected_qa / v_exact.sqrt(),
        v_asymptotic,
        expected_qa_asymptotic,
        r_n: small_rho_rate.max(large_rho_rate),
        r_n_minus,
        rho_tilde,
        c_mu_nu_eta: nm.eta.powi(4) / (nm.mu_eta * nm.nu_eta * nm.mu * nm.nu),
        regime,
        g1_ok,
        g2_ok,
        sp1_ok,
        sp2_ok,
    })
}
