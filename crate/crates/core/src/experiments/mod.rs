//! Experiment driver behind the `datahide` binary: layered configuration,
//! end-to-end runs with JSON and CSV output, invariant suites and the
//! concentration checks.

mod config;
mod facts;
mod run;
mod verify;

pub use config::{ConfigLayer, ExperimentConfig, DEFAULT_SEED};
pub use facts::{run_fact_checks, FactChecks, HaarTraceCase, GAUSSIAN_CASES, HAAR_CASES};
pub use run::{
    fingerprint, run_experiment, write_run_outputs, CheckResult, DiagnosticSummary, RunReport, SchemeSummary,
};
pub use verify::{run_suites, select_suites, Fault, SuiteOutcome, SUITES};
