//! Configuration-driven experiments: problem construction, grid tuning,
//! comparison reports and CSV/JSON emission.

mod config;
mod experiment;
mod plotdata;
mod tune;

pub use config::{
    parse_config, read_config, resolve_topology, ExperimentConfig, LyapunovSpec, MethodLabel, MethodSpec, Param,
    ProblemSpec,
};
pub use experiment::{
    build_problem, execute, fingerprint, initial_estimates, initial_integral, run_experiment, write_outputs,
    write_trace_csv, ComparisonReport, ExperimentOutcome, MethodSummary, Setup,
};
pub use plotdata::{emit_plotdata, plot_rows, PlotRow, METRICS};
pub use tune::{preconditioner_for, tune_grid, CellOutcome, CellScore, GridCell, RunSettings, TuneGrid, TuneResult};
