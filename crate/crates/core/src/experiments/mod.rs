//! Monte Carlo harness.
//!
//! A run is described by an [`ExperimentPlan`]. Replication `r` of cell `c`
//! draws its heterogeneity and graph from seeds derived from
//! `(seed, c, r)`, replications run in parallel and are reduced in index
//! order, so reports are byte-identical for any number of threads. Timings
//! are kept out of the report and written separately.

mod design;
mod runners;
mod summary;
mod table;

use serde::{Deserialize, Serialize};

pub use design::{ExperimentDesign, GammaLaw, GammaRule, HetLaw, RhoLaw, RhoRule};
pub use runners::{
    bench_counting, gamma_for_degree, run_estimation_table, run_misspec_bias, run_null_calibration,
    run_pair_comparison, run_power_study, run_variance_check, time_pipeline, BenchReport, BenchRow,
    CalibrationReport, CalibrationStatus, CellTiming, EstimationCell, EstimationReport, MisspecRow, MisspecReport,
    PairReport, PairRow, PowerReport, PowerRow, VarianceReport,
};
pub use summary::{log_log_slope, sample_variance, MeanSe, Rate};
pub use table::Table;

use crate::cycles::CancellationPair;
use crate::error::{LcrError, Result};
use crate::mle::SolverConfig;

fn yes() -> bool {
    true
}

fn default_level() -> f64 {
    0.05
}

fn default_band() -> (f64, f64) {
    (0.9, 1.1)
}

fn default_pairs() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_repeats() -> usize {
    3
}

/// A complete experiment, as read from a TOML or JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentPlan {
    Estimation {
        cells: Vec<ExperimentDesign>,
        #[serde(default = "yes")]
        mle: bool,
        #[serde(default)]
        solver: SolverConfig,
    },
    Power {
        design: ExperimentDesign,
        rho_grid: Vec<f64>,
        #[serde(default)]
        rho0: f64,
        #[serde(default = "default_level")]
        level: f64,
        #[serde(default = "yes")]
        lrt: bool,
        #[serde(default)]
        solver: SolverConfig,
    },
    NullCalibration {
        design: ExperimentDesign,
        #[serde(default = "default_level")]
        level: f64,
    },
    Misspec {
        design: ExperimentDesign,
        thetas: Vec<f64>,
    },
    Pairs {
        design: ExperimentDesign,
        #[serde(default = "default_pairs")]
        pairs: Vec<usize>,
    },
    Variance {
        design: ExperimentDesign,
        #[serde(default = "default_band")]
        band: (f64, f64),
    },
    Bench {
        n_grid: Vec<usize>,
        expected_degree: f64,
        #[serde(default = "default_repeats")]
        repeats: usize,
        #[serde(default)]
        seed: u64,
    },
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map_err(|e| LcrError::parse(crate::io::toml_line(text, e.span()), e.message().to_owned()))
    }

    /// Overrides the master seed (and replication count) of every design.
    pub fn override_seed(&mut self, seed: Option<u64>, reps: Option<usize>) {
        let apply = |d: &mut ExperimentDesign| {
            if let Some(s) = seed {
                d.seed = s;
            }
            if let Some(r) = reps {
                d.reps = r;
            }
        };
        match self {
            ExperimentPlan::Estimation { cells, .. } => cells.iter_mut().for_each(apply),
            ExperimentPlan::Power { design, .. }
            | ExperimentPlan::NullCalibration { design, .. }
            | ExperimentPlan::Misspec { design, .. }
            | ExperimentPlan::Pairs { design, .. }
            | ExperimentPlan::Variance { design, .. } => apply(design),
            ExperimentPlan::Bench { seed: s, repeats, .. } => {
                if let Some(v) = seed {
                    *s = v;
                }
                if let Some(r) = reps {
                    *repeats = r;
                }
            }
        }
    }

    /// Master seed of the first design.
    pub fn seed(&self) -> u64 {
        match self {
            ExperimentPlan::Estimation { cells, .. } => cells.first().map_or(0, |d| d.seed),
            ExperimentPlan::Power { design, .. }
            | ExperimentPlan::NullCalibration { design, .. }
            | ExperimentPlan::Misspec { design, .. }
            | ExperimentPlan::Pairs { design, .. }
            | ExperimentPlan::Variance { design, .. } => design.seed,
            ExperimentPlan::Bench { seed, .. } => *seed,
        }
    }
}

/// Rendered outputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Summary document (deterministic).
    pub json: String,
    /// One row per cell (deterministic).
    pub tsv: String,
    /// Further deterministic files, e.g. Q-Q data.
    pub extra: Vec<(String, String)>,
    /// Wall-clock per cell; varies between runs.
    pub timing_tsv: String,
}

fn render<T: Serialize>(report: &T, tsv: Table, timing: &[CellTiming]) -> ExperimentOutput {
    let mut json = serde_json::to_string_pretty(report).expect("reports serialize");
    json.push('\n');
    ExperimentOutput {
        json,
        tsv: tsv.to_tsv(),
        extra: Vec::new(),
        timing_tsv: CellTiming::table(timing).to_tsv(),
    }
}

/// Executes a plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentOutput> {
    match plan {
        ExperimentPlan::Estimation { cells, mle, solver } => {
            let r = run_estimation_table(cells, mle.then_some(solver))?;
            Ok(render(&r, r.table(), &r.timing))
        }
        ExperimentPlan::Power {
            design,
            rho_grid,
            rho0,
            level,
            lrt,
            solver,
        } => {
            let r = run_power_study(design, rho_grid, *rho0, *level, lrt.then_some(solver))?;
            Ok(render(&r, r.table(), &r.timing))
        }
        ExperimentPlan::NullCalibration { design, level } => {
            let r = run_null_calibration(design, *level)?;
            let mut out = render(&r, r.table(), &r.timing);
            out.extra.push(("qq.tsv".to_owned(), r.qq_table().to_tsv()));
            Ok(out)
        }
        ExperimentPlan::Misspec { design, thetas } => {
            let r = run_misspec_bias(design, thetas)?;
            Ok(render(&r, r.table(), &r.timing))
        }
        ExperimentPlan::Pairs { design, pairs } => {
            let pairs = pairs
                .iter()
                .map(|&id| CancellationPair::quadrilateral(id))
                .collect::<Result<Vec<_>>>()?;
            let r = run_pair_comparison(design, &pairs)?;
            Ok(render(&r, r.table(), &r.timing))
        }
        ExperimentPlan::Variance { design, band } => {
            let r = run_variance_check(design, *band)?;
            Ok(render(&r, r.table(), &r.timing))
        }
        ExperimentPlan::Bench {
            n_grid,
            expected_degree,
            repeats,
            seed,
        } => {
            let r = bench_counting(n_grid, *expected_degree, *repeats, *seed)?;
            Ok(render(&r, r.table(), &[]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> ExperimentDesign {
        ExperimentDesign::new(40, GammaRule::Law(GammaLaw::Dense), RhoRule::Law(RhoLaw::Half), reps, 11)
    }

    #[test]
    fn plan_parses_from_toml() {
        let text = r#"
kind = "power"
rho_grid = [0.0, 0.25]
lrt = false

[design]
n = 60
gamma = "moderate"
rho = "zero"
reps = 4
seed = 3
"#;
        let plan = ExperimentPlan::from_toml(text).unwrap();
        match &plan {
            ExperimentPlan::Power { design, level, .. } => {
                assert_eq!(design.gamma, GammaRule::Law(GammaLaw::Moderate));
                assert_eq!(*level, 0.05);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(plan.seed(), 3);
    }

    #[test]
    fn zero_replications_give_empty_pair_report() {
        let r = run_pair_comparison(&small(0), &CancellationPair::quadrilaterals()).unwrap();
        assert!(r.rows.is_empty());
    }

    #[test]
    fn single_replication_calibration_is_flagged() {
        let r = run_null_calibration(&small(1), 0.05).unwrap();
        assert_eq!(r.status, CalibrationStatus::TooFew);
        assert_eq!(r.ks_statistic, None);
    }

    #[test]
    fn empty_bench_grid() {
        let r = bench_counting(&[], 10.0, 1, 0).unwrap();
        assert!(r.rows.is_empty() && r.exponent.is_none());
    }

    #[test]
    fn estimation_rates_are_proportions() {
        let plan = ExperimentPlan::Estimation {
            cells: vec![small(3)],
            mle: true,
            solver: SolverConfig::default(),
        };
        let out = run_plan(&plan).unwrap();
        assert_eq!(out.tsv.lines().count(), 2);
        let r = run_estimation_table(&[small(3)], Some(&SolverConfig::default())).unwrap();
        let rate = r.cells[0].mle_nonexistent.unwrap();
        assert!((0.0..=1.0).contains(&rate.rate));
        assert_eq!(out.json, run_plan(&plan).unwrap().json);
    }
}
