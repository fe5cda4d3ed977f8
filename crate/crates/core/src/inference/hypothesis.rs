use serde::{Deserialize, Serialize};

use super::estimate::{estimate, LcrResult};
use super::normal::{critical_value, two_sided_p_value};
use super::plugin::{variance_hat_with, VarianceEstimates, VarianceForm};
use crate::cycles::CancellationPair;
use crate::error::{LcrError, Result};
use crate::graph::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Ok,
    /// Neither count is positive.
    NoEstimate,
    /// The plug-in variance is zero.
    ZeroVariance,
}

/// Two-sided tests of `ρ = rho0`.
///
/// `psi_star` standardizes the clamped estimate by the full plug-in
/// variance; `phi_star` standardizes the unclamped one by the mutual-edge
/// part only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub rho0: f64,
    pub level: f64,
    pub critical_value: f64,
    pub psi_star: Option<f64>,
    pub phi_star: Option<f64>,
    pub p_value_psi: Option<f64>,
    pub p_value_phi: Option<f64>,
    pub reject_psi: Option<bool>,
    pub reject_phi: Option<bool>,
    /// `ρ̂* ± z / SNR̂`.
    pub confidence_interval: Option<(f64, f64)>,
    pub status: TestStatus,
}

/// Everything computed for one graph: counts, variance, tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub estimate: LcrResult,
    pub variance: Option<VarianceEstimates>,
    pub test: TestResult,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(LcrError::domain(format!("level must lie in (0, 1), got {level}")))
    }
}

/// Tests from an existing estimate and variance.
pub fn test_from_parts(
    est: &LcrResult,
    var: Option<&VarianceEstimates>,
    rho0: f64,
    level: f64,
) -> Result<TestResult> {
    check_level(level)?;
    if !rho0.is_finite() {
        return Err(LcrError::domain("rho0 is not finite"));
    }
    let z = critical_value(level);
    let mut out = TestResult {
        rho0,
        level,
        critical_value: z,
        psi_star: None,
        phi_star: None,
        p_value_psi: None,
        p_value_phi: None,
        reject_psi: None,
        reject_phi: None,
        confidence_interval: None,
        status: TestStatus::NoEstimate,
    };
    let (Some(rho_star), Some(var)) = (est.rho_star, var) else {
        return Ok(out);
    };
    let Some(snr) = var.snr_hat else {
        out.status = TestStatus::ZeroVariance;
        return Ok(out);
    };
    out.status = TestStatus::Ok;
    let psi = snr * (rho_star - rho0);
    out.psi_star = Some(psi);
    out.p_value_psi = Some(two_sided_p_value(psi));
    out.reject_psi = Some(psi.abs() >= z);
    out.confidence_interval = Some((rho_star - z / snr, rho_star + z / snr));
    if let (Some(rho_hat), Some(snr_simple)) = (est.rho_hat, var.snr_hat_simple) {
        let phi = snr_simple * (rho_hat - rho0);
        out.phi_star = Some(phi);
        out.p_value_phi = Some(two_sided_p_value(phi));
        out.reject_phi = Some(phi.abs() >= z);
    }
    Ok(out)
}

/// Estimate, plug-in variance and both tests.
///
/// The variance is evaluated at the unclamped estimate, or at the saturated
/// endpoint when one count is zero.
pub fn analyze(g: &DirectedGraph, pair: &CancellationPair, rho0: f64, level: f64) -> Result<Analysis> {
    analyze_with(g, pair, rho0, level, VarianceForm::default())
}

/// [`analyze`] with a chosen form of the plug-in variance.
pub fn analyze_with(
    g: &DirectedGraph,
    pair: &CancellationPair,
    rho0: f64,
    level: f64,
    form: VarianceForm,
) -> Result<Analysis> {
    check_level(level)?;
    let est = estimate(g, pair)?;
    let variance = match est.rho_hat.or(est.rho_star) {
        Some(rho) => Some(variance_hat_with(g, rho, est.qa, form)?),
        None => None,
    };
    let test = test_from_parts(&est, variance.as_ref(), rho0, level)?;
    Ok(Analysis {
        estimate: est,
        variance,
        test,
    })
}

/// [`analyze`] with the default pair, returning only the tests.
pub fn test(g: &DirectedGraph, rho0: f64, level: f64) -> Result<TestResult> {
    Ok(analyze(g, &CancellationPair::default_pair(), rho0, level)?.test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::VarianceStatus;

    fn var(v: f64, w: f64, qa: f64) -> VarianceEstimates {
        VarianceEstimates {
            v_hat: v,
            w_hat: w,
            snr_hat: (v > 0.0).then(|| qa / v.sqrt()),
            snr_hat_simple: (w > 0.0).then(|| qa / w.sqrt()),
            rho: 0.0,
            form: crate::inference::VarianceForm::Complete,
            status: VarianceStatus::Ok,
        }
    }

    #[test]
    fn zero_statistic_has_unit_p_value() {
        let pair = CancellationPair::default_pair();
        let est = LcrResult::from_counts(100, 50, 50, &pair);
        let t = test_from_parts(&est, Some(&var(400.0, 300.0, 50.0)), 0.0, 0.05).unwrap();
        assert_eq!(t.psi_star, Some(0.0));
        assert_eq!(t.p_value_psi, Some(1.0));
        assert_eq!(t.reject_psi, Some(false));
    }

    #[test]
    fn rejection_matches_critical_value() {
        let pair = CancellationPair::default_pair();
        let est = LcrResult::from_counts(100, 200, 100, &pair);
        let t = test_from_parts(&est, Some(&var(100.0, 100.0, 200.0)), 0.0, 0.05).unwrap();
        let psi = t.psi_star.unwrap();
        assert_eq!(t.reject_psi, Some(psi.abs() >= t.critical_value));
        assert!(t.p_value_psi.unwrap() < 0.05);
    }

    #[test]
    fn degenerate_inputs() {
        let pair = CancellationPair::default_pair();
        let est = LcrResult::from_counts(100, 0, 0, &pair);
        let t = test_from_parts(&est, None, 0.0, 0.05).unwrap();
        assert_eq!(t.status, TestStatus::NoEstimate);
        let est = LcrResult::from_counts(100, 3, 3, &pair);
        let t = test_from_parts(&est, Some(&var(0.0, 0.0, 3.0)), 0.0, 0.05).unwrap();
        assert_eq!((t.status, t.reject_psi), (TestStatus::ZeroVariance, None));
        assert!(test_from_parts(&est, None, 0.0, 1.0).is_err());
    }
}
