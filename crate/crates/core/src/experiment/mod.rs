//! Config-driven experiments: one audit run and multi-seed sweeps.

mod config;
mod pipeline;
mod sweep;

pub use config::{DatasetSource, ExperimentConfig};
pub use pipeline::{
    make_partitions, run_pipeline, run_pipeline_full, AttackResult, AuditReport, DataSummary,
    ModelUtility, Overfitting, PartitionSizes, Partitions, PipelineOutput, UtilityReport,
};
pub use sweep::{
    aggregate, emit_sweep, sweep, sweep_seeds, sweep_with_threads, thread_cap, MetricSummary,
    SweepAggregate, SweepResult, THREADS_ENV,
};
