//! Experiment orchestration: configuration, seeded runs, persisted traces,
//! per-run metrics, comparisons and seed sweeps.

mod config;
mod report;
mod run;

pub use config::ExperimentConfig;
pub use report::{
    compare, headline_metrics, metric, reduction, run_metrics, sweep, write_metrics_csv, write_metrics_table,
    AggregateRow, Comparison, ComparisonRow, MetricRow, SweepReport,
};
pub use run::{build_env, build_policy, load_run_dir, run, RunArtifact, RunSeries, TickRecord, SIGNALS_HEADER, TRACE_HEADER};
