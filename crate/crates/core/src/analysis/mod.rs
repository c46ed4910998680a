//! Attack metrics, node-property grouping and report files.

mod grouping;
mod metrics;
mod report;

pub use grouping::{
    fixed_bin_groups, group_nodes, group_table, grouped_auc, partition_metric, percentile_groups,
    GroupAssignment, GroupRow, GroupTable, GroupingKind, GROUP_COUNT,
};
pub use metrics::{auc, auc_if_defined, confusion, ConfusionCounts, ConfusionRatios};
pub use report::{emit_report, EmbeddingRow, EmbeddingTable};
