//! Generate a synthetic block-model graph, write it in the on-disk dataset
//! format, load it back and print a few node statistics.
//!
//! ```text
//! cargo run --release --example synth_dataset -- [out_dir]
//! ```

use gnn_audit::graph::{
    generate_synthetic, load_dataset, node_metric, write_dataset, NodeMetric, SyntheticParams,
};

fn main() -> gnn_audit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("gnn-audit-synth")
            .display()
            .to_string()
    });

    let params = SyntheticParams {
        n: 1200,
        ..SyntheticParams::default()
    };
    let ds = generate_synthetic(&params)?;
    write_dataset(&ds, &out)?;
    let back = load_dataset(&out)?;
    assert_eq!(back.graph, ds.graph);

    println!("wrote {out}");
    println!(
        "{} nodes, {} edges (expected {:.0}), {} classes, {} features",
        back.node_count(),
        back.graph.edge_count(),
        params.expected_edges(),
        back.class_count,
        back.feature_dim()
    );

    for metric in NodeMetric::ALL {
        let values: Vec<f64> = (0..back.node_count())
            .map(|v| node_metric(&back, v, metric))
            .collect::<Result<_, _>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        println!("{metric:>20}: mean {mean:.4}, max {max:.4}");
    }
    Ok(())
}
