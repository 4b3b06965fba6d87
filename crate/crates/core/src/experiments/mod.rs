//! The six experiment designs, their reports and configuration.

mod config;
mod report;
mod runner;

pub use config::{ExperimentConfig, ExperimentKind, SvmGrid};
pub use report::{
    emit_report, render_csv, render_markdown, render_metadata, AccuracyTable, CellInfo, Report,
    ReportFormat,
};
pub use runner::{
    exp_gap_sweep, exp_multiclass, exp_pairwise, exp_robustness, exp_temporal24h,
    exp_window_temporal, fit_cell, multiclass_columns, run_experiment, run_on_dataset,
    runs_per_six_hours, FittedCell, SPLIT,
};
