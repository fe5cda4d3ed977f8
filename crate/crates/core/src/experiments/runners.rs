use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::ExperimentDesign;
use super::summary::{log_log_slope, sample_variance, MeanSe, Rate};
use super::table::{fmt_opt, Table};
use crate::cycles::{fast_count_pair, CancellationPair};
use crate::error::{LcrError, Result};
use crate::graph::DirectedGraph;
use crate::inference::normal::{ks_p_value, ks_statistic, normal_quantile};
use crate::inference::{analyze, estimate, theory_diagnostics, variance_hat, Analysis, TheoryConfig, TheoryMode};
use crate::mle::{existence_check, fit, lrt, ExistenceVerdict, SolverConfig};
use crate::model::{draw_heterogeneity, ModelParams};

/// Wall-clock spent per component in one cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub cell: usize,
    pub sample_secs: f64,
    pub lcr_secs: f64,
    pub mle_secs: f64,
}

impl CellTiming {
    pub fn table(rows: &[CellTiming]) -> Table {
        let mut t = Table::new(&["cell", "sample_secs", "lcr_secs", "mle_secs"]);
        for r in rows {
            t.push(vec![
                r.cell.to_string(),
                format!("{:.6}", r.sample_secs),
                format!("{:.6}", r.lcr_secs),
                format!("{:.6}", r.mle_secs),
            ]);
        }
        t
    }
}

#[derive(Default, Clone, Copy)]
struct Clock {
    sample: Duration,
    lcr: Duration,
    mle: Duration,
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

fn total_timing(cell: usize, clocks: &[Clock]) -> CellTiming {
    let sum = |f: fn(&Clock) -> Duration| clocks.iter().map(f).sum::<Duration>().as_secs_f64();
    CellTiming {
        cell,
        sample_secs: sum(|c| c.sample),
        lcr_secs: sum(|c| c.lcr),
        mle_secs: sum(|c| c.mle),
    }
}

fn density(g: &DirectedGraph) -> f64 {
    let n = g.n() as f64;
    g.edge_count() as f64 / (n * (n - 1.0))
}

/// Runs `f` for every replication in parallel; results come back in
/// replication order.
fn per_rep<T: Send>(design: &ExperimentDesign, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    design.validate()?;
    (0..design.reps).into_par_iter().map(f).collect()
}

/// MLE outcome of one replication; `None` when it does not exist.
fn mle_rho(g: &DirectedGraph, solver: &SolverConfig) -> Result<Option<f64>> {
    if existence_check(g).verdict == ExistenceVerdict::DefinitelyNonexistent {
        return Ok(None);
    }
    let f = fit(g, solver)?;
    Ok((f.converged && !f.diverged).then_some(f.rho))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationCell {
    pub cell: usize,
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub seed: u64,
    pub reps: usize,
    pub density: Option<MeanSe>,
    /// Mean `|ρ̂* − ρ|` over replications with an estimate.
    pub lcr_abs_error: Option<MeanSe>,
    /// Replications where both counts vanished.
    pub lcr_undefined: usize,
    /// Replications where one count vanished and the estimate saturated.
    pub lcr_saturated: usize,
    /// Mean `|ρ̂_mle − ρ|` over replications where the MLE exists.
    pub mle_abs_error: Option<MeanSe>,
    /// Replications excluded because the MLE does not exist.
    pub mle_excluded: usize,
    pub mle_nonexistent: Option<Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub cells: Vec<EstimationCell>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// Mean absolute error of the log-ratio estimate and, optionally, of the MLE.
pub fn run_estimation_table(cells: &[ExperimentDesign], mle: Option<&SolverConfig>) -> Result<EstimationReport> {
    let pair = CancellationPair::default_pair();
    let mut out = Vec::with_capacity(cells.len());
    let mut timing = Vec::with_capacity(cells.len());
    for (cell, design) in cells.iter().enumerate() {
        let rho = design.rho_value();
        let reps = per_rep(design, |rep| {
            let mut clock = Clock::default();
            let (_, g) = timed(&mut clock.sample, || design.replicate(cell, rep))?;
            let est = timed(&mut clock.lcr, || estimate(&g, &pair))?;
            let m = match mle {
                Some(solver) => Some(timed(&mut clock.mle, || mle_rho(&g, solver))?),
                None => None,
            };
            Ok((density(&g), est, m, clock))
        })?;
        let lcr_err: Vec<f64> = reps
            .iter()
            .filter_map(|r| r.1.rho_star.map(|s| (s - rho).abs()))
            .collect();
        let mle_err: Vec<f64> = reps
            .iter()
            .filter_map(|r| r.2.flatten().map(|m| (m - rho).abs()))
            .collect();
        let densities: Vec<f64> = reps.iter().map(|r| r.0).collect();
        let clocks: Vec<Clock> = reps.iter().map(|r| r.3).collect();
        out.push(EstimationCell {
            cell,
            n: design.n,
            gamma: design.gamma_value(),
            rho,
            seed: design.cell_seed(cell),
            reps: design.reps,
            density: MeanSe::of(&densities),
            lcr_abs_error: MeanSe::of(&lcr_err),
            lcr_undefined: reps.iter().filter(|r| r.1.rho_star.is_none()).count(),
            lcr_saturated: reps
                .iter()
                .filter(|r| r.1.rho_star.is_some() && r.1.rho_hat.is_none())
                .count(),
            mle_abs_error: MeanSe::of(&mle_err),
            mle_excluded: if mle.is_some() { design.reps - mle_err.len() } else { 0 },
            mle_nonexistent: mle.and_then(|_| Rate::from_flags(reps.iter().map(|r| r.2 == Some(None)))),
        });
        timing.push(total_timing(cell, &clocks));
    }
    Ok(EstimationReport { cells: out, timing })
}

impl EstimationReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "cell",
            "n",
            "gamma",
            "rho",
            "seed",
            "reps",
            "density",
            "lcr_mae",
            "lcr_mae_se",
            "lcr_undefined",
            "lcr_saturated",
            "mle_mae",
            "mle_mae_se",
            "mle_excluded",
            "mle_nonexistent",
            "mle_nonexistent_se",
        ]);
        for c in &self.cells {
            t.push(vec![
                c.cell.to_string(),
                c.n.to_string(),
                c.gamma.to_string(),
                c.rho.to_string(),
                c.seed.to_string(),
                c.reps.to_string(),
                fmt_opt(c.density.map(|d| d.mean)),
                fmt_opt(c.lcr_abs_error.map(|d| d.mean)),
                fmt_opt(c.lcr_abs_error.map(|d| d.se)),
                c.lcr_undefined.to_string(),
                c.lcr_saturated.to_string(),
                fmt_opt(c.mle_abs_error.map(|d| d.mean)),
                fmt_opt(c.mle_abs_error.map(|d| d.se)),
                c.mle_excluded.to_string(),
                fmt_opt(c.mle_nonexistent.map(|r| r.rate)),
                fmt_opt(c.mle_nonexistent.map(|r| r.se)),
            ]);
        }
        t
    }

    pub fn timing_table(&self) -> Table {
        CellTiming::table(&self.timing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub cell: usize,
    pub rho: f64,
    pub seed: u64,
    pub psi_reject: Option<Rate>,
    pub phi_reject: Option<Rate>,
    /// Among replications where the likelihood-ratio test exists.
    pub lrt_reject: Option<Rate>,
    pub lrt_nonexistent: Option<Rate>,
    /// Replications without a test decision.
    pub undecided: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub n: usize,
    pub gamma: f64,
    pub rho0: f64,
    pub level: f64,
    pub reps: usize,
    pub rows: Vec<PowerRow>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// Rejection rates of `ψ*`, `φ*` and (for `rho0 = 0`) the likelihood-ratio
/// test across a grid of true `ρ`.
pub fn run_power_study(
    design: &ExperimentDesign,
    rho_grid: &[f64],
    rho0: f64,
    level: f64,
    lrt_solver: Option<&SolverConfig>,
) -> Result<PowerReport> {
    if lrt_solver.is_some() && rho0 != 0.0 {
        return Err(LcrError::domain("the likelihood-ratio test is only available for rho0 = 0"));
    }
    let pair = CancellationPair::default_pair();
    let mut rows = Vec::with_capacity(rho_grid.len());
    let mut timing = Vec::with_capacity(rho_grid.len());
    for (cell, &rho) in rho_grid.iter().enumerate() {
        let d = ExperimentDesign {
            rho: super::RhoRule::Value(rho),
            ..design.clone()
        };
        let reps = per_rep(&d, |rep| {
            let mut clock = Clock::default();
            let (_, g) = timed(&mut clock.sample, || d.replicate(cell, rep))?;
            let a = timed(&mut clock.lcr, || analyze(&g, &pair, rho0, level))?;
            let l = match lrt_solver {
                Some(solver) => Some(timed(&mut clock.mle, || -> Result<Option<f64>> {
                    if existence_check(&g).verdict == ExistenceVerdict::DefinitelyNonexistent {
                        return Ok(None);
                    }
                    Ok(lrt(&g, solver)?.p_value)
                })?),
                None => None,
            };
            Ok((a, l, clock))
        })?;
        let lrt_p: Vec<f64> = reps.iter().filter_map(|r| r.1.flatten()).collect();
        rows.push(PowerRow {
            cell,
            rho,
            seed: d.cell_seed(cell),
            psi_reject: Rate::from_flags(reps.iter().filter_map(|r| r.0.test.reject_psi)),
            phi_reject: Rate::from_flags(reps.iter().filter_map(|r| r.0.test.reject_phi)),
            lrt_reject: Rate::from_flags(lrt_p.iter().map(|&p| p < level)),
            lrt_nonexistent: lrt_solver.and_then(|_| Rate::from_flags(reps.iter().map(|r| r.1 == Some(None)))),
            undecided: reps.iter().filter(|r| r.0.test.reject_psi.is_none()).count(),
        });
        let clocks: Vec<Clock> = reps.iter().map(|r| r.2).collect();
        timing.push(total_timing(cell, &clocks));
    }
    Ok(PowerReport {
        n: design.n,
        gamma: design.gamma_value(),
        rho0,
        level,
        reps: design.reps,
        rows,
        timing,
    })
}

impl PowerReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "cell",
            "n",
            "gamma",
            "rho",
            "rho0",
            "level",
            "seed",
            "psi_reject",
            "psi_reject_se",
            "phi_reject",
            "phi_reject_se",
            "lrt_reject",
            "lrt_reject_se",
            "lrt_nonexistent",
            "undecided",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.cell.to_string(),
                self.n.to_string(),
                self.gamma.to_string(),
                r.rho.to_string(),
                self.rho0.to_string(),
                self.level.to_string(),
                r.seed.to_string(),
                fmt_opt(r.psi_reject.map(|x| x.rate)),
                fmt_opt(r.psi_reject.map(|x| x.se)),
                fmt_opt(r.phi_reject.map(|x| x.rate)),
                fmt_opt(r.phi_reject.map(|x| x.se)),
                fmt_opt(r.lrt_reject.map(|x| x.rate)),
                fmt_opt(r.lrt_reject.map(|x| x.se)),
                fmt_opt(r.lrt_nonexistent.map(|x| x.rate)),
                r.undecided.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationStatus {
    Ok,
    /// Fewer than two statistics; no distribution test.
    TooFew,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    /// `(normal quantile, sorted ψ*)` at plotting positions `(k − ½)/m`.
    pub qq: Vec<(f64, f64)>,
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub reject: Option<Rate>,
    pub undecided: usize,
    pub status: CalibrationStatus,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// Distribution of `ψ*` when the null `ρ₀ = ρ` holds.
pub fn run_null_calibration(design: &ExperimentDesign, level: f64) -> Result<CalibrationReport> {
    let pair = CancellationPair::default_pair();
    let rho = design.rho_value();
    let reps = per_rep(design, |rep| {
        let mut clock = Clock::default();
        let (_, g) = timed(&mut clock.sample, || design.replicate(0, rep))?;
        let a: Analysis = timed(&mut clock.lcr, || analyze(&g, &pair, rho, level))?;
        Ok((a.test.psi_star, a.test.reject_psi, clock))
    })?;
    let mut psi: Vec<f64> = reps.iter().filter_map(|r| r.0).collect();
    psi.sort_by(f64::total_cmp);
    let m = psi.len();
    let qq = psi
        .iter()
        .enumerate()
        .map(|(k, &x)| (normal_quantile((k as f64 + 0.5) / m as f64), x))
        .collect();
    let ks = if m >= 2 { ks_statistic(&psi) } else { None };
    let clocks: Vec<Clock> = reps.iter().map(|r| r.2).collect();
    Ok(CalibrationReport {
        n: design.n,
        gamma: design.gamma_value(),
        rho,
        level,
        reps: design.reps,
        seed: design.cell_seed(0),
        qq,
        ks_statistic: ks,
        ks_p_value: ks.map(|d| ks_p_value(d, m)),
        reject: Rate::from_flags(reps.iter().filter_map(|r| r.1)),
        undecided: design.reps - m,
        status: if ks.is_some() {
            CalibrationStatus::Ok
        } else {
            CalibrationStatus::TooFew
        },
        timing: vec![total_timing(0, &clocks)],
    })
}

impl CalibrationReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n",
            "gamma",
            "rho",
            "level",
            "reps",
            "seed",
            "ks_statistic",
            "ks_p_value",
            "reject",
            "reject_se",
            "undecided",
        ]);
        t.push(vec![
            self.n.to_string(),
            self.gamma.to_string(),
            self.rho.to_string(),
            self.level.to_string(),
            self.reps.to_string(),
            self.seed.to_string(),
            fmt_opt(self.ks_statistic),
            fmt_opt(self.ks_p_value),
            fmt_opt(self.reject.map(|r| r.rate)),
            fmt_opt(self.reject.map(|r| r.se)),
            self.undecided.to_string(),
        ]);
        t
    }

    pub fn qq_table(&self) -> Table {
        let mut t = Table::new(&["normal_quantile", "psi_star"]);
        for &(q, x) in &self.qq {
            t.push(vec![q.to_string(), x.to_string()]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecRow {
    pub cell: usize,
    pub theta: f64,
    pub seed: u64,
    /// Mean `|ρ̂* − ρ|`.
    pub abs_error: Option<MeanSe>,
    /// Mean `ρ̂* − ρ`.
    pub signed_error: Option<MeanSe>,
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecReport {
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub reps: usize,
    pub rows: Vec<MisspecRow>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// Estimation error when the two-community tilt `θ` is present.
pub fn run_misspec_bias(design: &ExperimentDesign, thetas: &[f64]) -> Result<MisspecReport> {
    let pair = CancellationPair::default_pair();
    let rho = design.rho_value();
    let mut rows = Vec::with_capacity(thetas.len());
    let mut timing = Vec::with_capacity(thetas.len());
    for (cell, &theta) in thetas.iter().enumerate() {
        let d = ExperimentDesign {
            theta: Some(theta),
            ..design.clone()
        };
        let reps = per_rep(&d, |rep| {
            let mut clock = Clock::default();
            let (_, g) = timed(&mut clock.sample, || d.replicate(cell, rep))?;
            let est = timed(&mut clock.lcr, || estimate(&g, &pair))?;
            Ok((est.rho_star, clock))
        })?;
        let err: Vec<f64> = reps.iter().filter_map(|r| r.0.map(|s| s - rho)).collect();
        let abs: Vec<f64> = err.iter().map(|e| e.abs()).collect();
        rows.push(MisspecRow {
            cell,
            theta,
            seed: d.cell_seed(cell),
            abs_error: MeanSe::of(&abs),
            signed_error: MeanSe::of(&err),
            undefined: d.reps - err.len(),
        });
        let clocks: Vec<Clock> = reps.iter().map(|r| r.1).collect();
        timing.push(total_timing(cell, &clocks));
    }
    Ok(MisspecReport {
        n: design.n,
        gamma: design.gamma_value(),
        rho,
        reps: design.reps,
        rows,
        timing,
    })
}

impl MisspecReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "cell",
            "n",
            "gamma",
            "rho",
            "theta",
            "seed",
            "mae",
            "mae_se",
            "mean_error",
            "mean_error_se",
            "undefined",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.cell.to_string(),
                self.n.to_string(),
                self.gamma.to_string(),
                self.rho.to_string(),
                r.theta.to_string(),
                r.seed.to_string(),
                fmt_opt(r.abs_error.map(|x| x.mean)),
                fmt_opt(r.abs_error.map(|x| x.se)),
                fmt_opt(r.signed_error.map(|x| x.mean)),
                fmt_opt(r.signed_error.map(|x| x.se)),
                r.undefined.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub pair_id: Option<usize>,
    pub a: String,
    pub b: String,
    pub c0: u32,
    pub abs_error: Option<MeanSe>,
    pub squared_error: Option<MeanSe>,
    /// Mean of `Q(a) − e^{c0 ρ} Q(b)` at the true `ρ`.
    pub mean_u: Option<MeanSe>,
    /// Mean `Q(a)` divided by the sample standard deviation of the centered
    /// difference.
    pub snr_empirical: Option<f64>,
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<PairRow>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// All pairs evaluated on the same sampled graphs.
pub fn run_pair_comparison(design: &ExperimentDesign, pairs: &[CancellationPair]) -> Result<PairReport> {
    let rho = design.rho_value();
    let reps = per_rep(design, |rep| {
        let mut clock = Clock::default();
        let (_, g) = timed(&mut clock.sample, || design.replicate(0, rep))?;
        let ests = timed(&mut clock.lcr, || {
            pairs.iter().map(|p| estimate(&g, p)).collect::<Result<Vec<_>>>()
        })?;
        Ok((ests, clock))
    })?;
    let rows = if reps.is_empty() {
        Vec::new()
    } else {
        pairs
            .iter()
            .enumerate()
            .map(|(k, pair)| {
                let ests: Vec<_> = reps.iter().map(|r| &r.0[k]).collect();
                let err: Vec<f64> = ests.iter().filter_map(|e| e.rho_star.map(|s| s - rho)).collect();
                let abs: Vec<f64> = err.iter().map(|e| e.abs()).collect();
                let sq: Vec<f64> = err.iter().map(|e| e * e).collect();
                let u: Vec<f64> = ests.iter().map(|e| e.u_statistic(rho)).collect();
                let qa: Vec<f64> = ests.iter().map(|e| e.qa as f64).collect();
                let snr = match (MeanSe::of(&qa), sample_variance(&u)) {
                    (Some(q), Some(v)) if v > 0.0 => Some(q.mean / v.sqrt()),
                    _ => None,
                };
                PairRow {
                    pair_id: ests[0].pair_id,
                    a: pair.a.to_string(),
                    b: pair.b.to_string(),
                    c0: pair.c0,
                    abs_error: MeanSe::of(&abs),
                    squared_error: MeanSe::of(&sq),
                    mean_u: MeanSe::of(&u),
                    snr_empirical: snr,
                    undefined: ests.len() - err.len(),
                }
            })
            .collect()
    };
    let clocks: Vec<Clock> = reps.iter().map(|r| r.1).collect();
    Ok(PairReport {
        n: design.n,
        gamma: design.gamma_value(),
        rho,
        reps: design.reps,
        seed: design.cell_seed(0),
        rows,
        timing: vec![total_timing(0, &clocks)],
    })
}

impl PairReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "pair_id",
            "a",
            "b",
            "c0",
            "n",
            "gamma",
            "rho",
            "mae",
            "mae_se",
            "mse",
            "mse_se",
            "mean_u",
            "mean_u_se",
            "snr_empirical",
            "undefined",
        ]);
        for r in &self.rows {
            t.push(vec![
                fmt_opt(r.pair_id),
                r.a.clone(),
                r.b.clone(),
                r.c0.to_string(),
                self.n.to_string(),
                self.gamma.to_string(),
                self.rho.to_string(),
                fmt_opt(r.abs_error.map(|x| x.mean)),
                fmt_opt(r.abs_error.map(|x| x.se)),
                fmt_opt(r.squared_error.map(|x| x.mean)),
                fmt_opt(r.squared_error.map(|x| x.se)),
                fmt_opt(r.mean_u.map(|x| x.mean)),
                fmt_opt(r.mean_u.map(|x| x.se)),
                fmt_opt(r.snr_empirical),
                r.undefined.to_string(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub reps: usize,
    pub seed: u64,
    pub mode: TheoryMode,
    /// Population variance of the centered count difference.
    pub v_exact: f64,
    pub expected_qa: f64,
    pub mean_qa: Option<MeanSe>,
    /// Plug-in variance over `v_exact`.
    pub ratio: Option<MeanSe>,
    pub band: (f64, f64),
    /// Fraction of replications with the ratio inside `band`.
    pub within_band: Option<Rate>,
    pub mean_u: Option<MeanSe>,
    /// Sample variance of the centered difference over `v_exact`.
    pub var_u_ratio: Option<f64>,
    /// Normal-theory standard error of `var_u_ratio`.
    pub var_u_ratio_se: Option<f64>,
    #[serde(skip)]
    pub timing: Vec<CellTiming>,
}

/// Plug-in and Monte Carlo variance against the population value at one
/// fixed parameter vector (heterogeneity drawn once for the cell).
pub fn run_variance_check(design: &ExperimentDesign, band: (f64, f64)) -> Result<VarianceReport> {
    let design = ExperimentDesign {
        fixed_heterogeneity: true,
        ..design.clone()
    };
    design.validate()?;
    let params = design.params(0, 0)?;
    let theory = theory_diagnostics(&params, &TheoryConfig::default())?;
    let rho = params.rho();
    let pair = CancellationPair::default_pair();
    let reps = per_rep(&design, |rep| {
        let mut clock = Clock::default();
        let (_, g) = timed(&mut clock.sample, || design.replicate(0, rep))?;
        let (est, v) = timed(&mut clock.lcr, || -> Result<_> {
            let est = estimate(&g, &pair)?;
            let v = match est.rho_hat.or(est.rho_star) {
                Some(r) => Some(variance_hat(&g, r, est.qa)?.v_hat),
                None => None,
            };
            Ok((est, v))
        })?;
        Ok((est.u_statistic(rho), est.qa as f64, v, clock))
    })?;
    let ratios: Vec<f64> = reps.iter().filter_map(|r| r.2.map(|v| v / theory.v_exact)).collect();
    let u: Vec<f64> = reps.iter().map(|r| r.0).collect();
    let qa: Vec<f64> = reps.iter().map(|r| r.1).collect();
    let var_u_ratio = sample_variance(&u).map(|v| v / theory.v_exact);
    let clocks: Vec<Clock> = reps.iter().map(|r| r.3).collect();
    Ok(VarianceReport {
        n: design.n,
        gamma: params.gamma(),
        rho,
        reps: design.reps,
        seed: design.cell_seed(0),
        mode: theory.mode,
        v_exact: theory.v_exact,
        expected_qa: theory.expected_qa,
        mean_qa: MeanSe::of(&qa),
        ratio: MeanSe::of(&ratios),
        band,
        within_band: Rate::from_flags(ratios.iter().map(|&r| r >= band.0 && r <= band.1)),
        mean_u: MeanSe::of(&u),
        var_u_ratio,
        var_u_ratio_se: var_u_ratio.map(|r| r * (2.0 / (u.len() as f64 - 1.0)).sqrt()),
        timing: vec![total_timing(0, &clocks)],
    })
}

impl VarianceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n",
            "gamma",
            "rho",
            "reps",
            "seed",
            "mode",
            "v_exact",
            "expected_qa",
            "mean_qa",
            "ratio_mean",
            "ratio_se",
            "within_band",
            "var_u_ratio",
            "var_u_ratio_se",
        ]);
        t.push(vec![
            self.n.to_string(),
            self.gamma.to_string(),
            self.rho.to_string(),
            self.reps.to_string(),
            self.seed.to_string(),
            match self.mode {
                TheoryMode::Exact => "exact".into(),
                TheoryMode::Asymptotic => "asymptotic".into(),
            },
            self.v_exact.to_string(),
            self.expected_qa.to_string(),
            fmt_opt(self.mean_qa.map(|x| x.mean)),
            fmt_opt(self.ratio.map(|x| x.mean)),
            fmt_opt(self.ratio.map(|x| x.se)),
            fmt_opt(self.within_band.map(|x| x.rate)),
            fmt_opt(self.var_u_ratio),
            fmt_opt(self.var_u_ratio_se),
        ]);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub gamma: f64,
    pub edges: usize,
    /// Fastest of the repeats.
    pub count_secs: f64,
    pub variance_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub expected_degree: f64,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
    /// Slope of `ln total_secs` against `ln n`.
    pub exponent: Option<f64>,
}

/// `γ` giving mean out-degree about `degree` under the default heterogeneity
/// law: `E[e^α] = e^{1/2}` and `E[e^β] = sinh 1`.
pub fn gamma_for_degree(n: usize, degree: f64) -> f64 {
    (degree / ((n as f64 - 1.0) * 0.5f64.exp() * 1f64.sinh())).ln()
}

/// Times the counts and the plug-in variance on one graph per `n`.
pub fn bench_counting(n_grid: &[usize], expected_degree: f64, repeats: usize, seed: u64) -> Result<BenchReport> {
    let pair = CancellationPair::default_pair();
    let repeats = repeats.max(1);
    let mut rows = Vec::with_capacity(n_grid.len());
    for (cell, &n) in n_grid.iter().enumerate() {
        let gamma = gamma_for_degree(n, expected_degree);
        let (a, b) = draw_heterogeneity(n, crate::rng::derive_seed(seed, cell as u64, 0));
        let g = ModelParams::new(0.0, gamma, a, b)?.sample(crate::rng::derive_seed(seed, cell as u64, 1));
        let (count_secs, variance_secs) = time_pipeline(&g, &pair, repeats)?;
        rows.push(BenchRow {
            n,
            gamma,
            edges: g.edge_count(),
            count_secs,
            variance_secs,
            total_secs: count_secs + variance_secs,
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.total_secs)).collect();
    Ok(BenchReport {
        expected_degree,
        repeats,
        exponent: log_log_slope(&points),
        rows,
    })
}

/// Fastest `(count, variance)` wall-clock seconds over `repeats` runs.
pub fn time_pipeline(g: &DirectedGraph, pair: &CancellationPair, repeats: usize) -> Result<(f64, f64)> {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let (qa, qb) = fast_count_pair(g, pair)?;
        let counted = start.elapsed().as_secs_f64();
        let est = crate::inference::LcrResult::from_counts(g.n(), qa, qb, pair);
        let start = Instant::now();
        variance_hat(g, est.rho_hat.or(est.rho_star).unwrap_or(0.0), qa)?;
        let varied = start.elapsed().as_secs_f64();
        best = (best.0.min(counted), best.1.min(varied));
    }
    Ok(best)
}

impl BenchReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "gamma", "edges", "count_secs", "variance_secs", "total_secs"]);
        for r in &self.rows {
            t.push(vec![
                r.n.to_string(),
                r.gamma.to_string(),
                r.edges.to_string(),
                format!("{:.6}", r.count_secs),
                format!("{:.6}", r.variance_secs),
                format!("{:.6}", r.total_secs),
            ]);
        }
        t
    }
}
