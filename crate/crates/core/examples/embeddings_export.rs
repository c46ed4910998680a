//! Run one experiment with embedding export on and write the report
//! directory, including `embeddings.csv` for external plotting.

use gnn_audit::analysis::emit_report;
use gnn_audit::experiment::{run_pipeline_full, ExperimentConfig};

fn main() -> gnn_audit::Result<()> {
    let cfg = ExperimentConfig {
        emit_embeddings: true,
        grouping: false,
        ..Default::default()
    };
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("gnn-audit-embeddings"));
    let output = run_pipeline_full(&cfg)?;
    let path = emit_report(&output.report, &output.embeddings, &out)?;
    println!("{}", path.display());
    for t in &output.embeddings {
        println!(
            "{}: {} rows x {} dims",
            t.attack,
            t.rows.len(),
            t.rows.first().map_or(0, |r| r.values.len())
        );
    }
    Ok(())
}
