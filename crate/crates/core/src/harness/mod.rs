//! Experiment configuration, sweeps, persistence and reports.

mod config;
mod diagnose;
mod record;
mod report;
mod runner;

pub use config::{
    ConditionKind, DatasetSource, ExperimentConfig, MapRef, NoiseCondition, OUT_ENV,
};
pub use diagnose::{diagnose, DiagnoseOptions, DiagnoseReport};
pub use record::{load_records, RunRecord, SelectionComparison};
pub use report::{build_report, Comparison, CollapseAlert, Report, SummaryRow};
pub use runner::{
    prepare_data, run_cell, run_experiment, selection_comparison, write_results_csv, Cell,
    ExperimentOutput, PreparedData,
};
