//! Scenario runner tying the modules together.

mod run;
mod scenario;
mod theorem;

pub use run::{run_scenario, Outcome, RunOptions, RunSummary};
pub use scenario::{
    Experiment, GridSpec, PacketSpec, RandomStarts, Scenario, Space, Starts, EXPERIMENT_KINDS, SCHEMA_VERSION,
};
pub use theorem::{
    agreement, smoothing_check, theorem_check, Agreement, InitialState, SmoothingReport, TheoremCheckConfig, TheoremCheckReport,
    TheoremDiagnostics,
};
