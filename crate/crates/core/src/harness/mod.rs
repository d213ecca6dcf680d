//! Experiment sweeps, trace files, summary tables and reference checks.

pub mod check;
pub mod config;
pub mod sweep;
pub mod table;
pub mod trace;

pub use check::{run_checks, trace_violations, CheckResult, TraceViolations};
pub use config::{resolve_out_dir, Experiment, ExperimentConfig, HessianChoice, KappaSetting, SolverOverrides, OUT_DIR_ENV, PRESET_THETA2};
pub use sweep::{run_single, run_sweep, write_outputs, Instance, OutputPaths, RunOutcome, SweepResult};
pub use table::{aggregate, emit_table, format_sci, parse_table, summarize, RunRecord, RunSummary, TableRow, TABLE_HEADER};
pub use trace::{read_trace, read_trace_dir, reaggregate, write_trace, Trace, TraceLine};
