//! The log-ratio estimator, its plug-in variance, tests of `ρ = ρ₀`, and
//! population diagnostics for known parameters.

mod estimate;
mod hypothesis;
pub mod normal;
mod plugin;
mod theory;

pub use estimate::{estimate, hard_threshold, threshold_for, CountStatus, LcrResult};
pub use hypothesis::{analyze, analyze_with, test, test_from_parts, Analysis, TestResult, TestStatus};
pub(crate) use plugin::Neumaier;
pub use plugin::{rst_hat, variance_hat, variance_hat_with, PluginSums, VarianceEstimates, VarianceForm, VarianceStatus};
pub use theory::{
    asymptotic_variance, theory_diagnostics, OmegaMatrices, Regime, TheoryConfig, TheoryDiagnostics, TheoryMode,
};
