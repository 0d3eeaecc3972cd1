//! Selection runs and Monte Carlo convergence experiments.

mod exec;
mod monte_carlo;
mod quantile;
mod schedule;
mod selection;

pub use exec::{ordered_map, Execution};
pub use monte_carlo::{
    aggregate, cross_term_slope, cross_term_slope_of, log_log_slope, monte_carlo, monte_carlo_resume,
    monte_carlo_with, tvp_block_diagnostic, CellSummary, ExperimentConfig, MCRun, MCSummary, ReplicationRow,
    SampleDiagnostics,
};
pub use quantile::{median, quantile_type8};
pub use schedule::{CriterionKind, CriterionSpec, ResolvedCriterion, Schedule, ScheduleRule};
pub use selection::{run_selection, Evaluator, SelectionReport};
