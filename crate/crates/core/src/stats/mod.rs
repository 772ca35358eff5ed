//! Correlation coefficients and the evaluation harnesses built on them.

mod correlation;
mod harness;
mod perturb;

pub use correlation::{
    average_ranks, correlation_report, kendall_tau_b, pearson, pearson_p_value, spearman, CorrelationReport,
};
pub use harness::{
    case_to_json, load_cases, pairwise_accuracy, refcount_sweep, robustness_accuracy, sweep_counts, system_level,
    AccuracyReport, Choice, ForcedChoiceCase, RobustnessReport, ScoredItem, SweepPoint, SystemReport, SystemScore,
    Tally,
};
pub use perturb::{perturb_generate, Lexicons, PerturbTask};
