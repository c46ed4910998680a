//! What a 0-hop and a 2-hop query reveal to the model.
//!
//! A 2-hop query hands a 2-layer GNN its exact receptive field, so the answer
//! matches the full-graph forward pass. A 0-hop query only shows the node's
//! own features.

use gnn_audit::graph::{generate_synthetic, khop_subgraph, SyntheticParams};
use gnn_audit::models::{full_graph_posteriors, predict, train, Arch, ModelConfig, QueryMode};
use gnn_audit::numerics::RngStream;

fn main() -> gnn_audit::Result<()> {
    let ds = generate_synthetic(&SyntheticParams {
        n: 500,
        dim: 32,
        intra_p: 0.03,
        ..Default::default()
    })?;
    let cfg = ModelConfig {
        epochs: 50,
        ..ModelConfig::new(Arch::Sage)
    };
    let model = train(&cfg, &ds, &RngStream::new(3))?;
    let full = full_graph_posteriors(&model, &ds)?;

    let mut worst = 0.0f64;
    for v in 0..ds.node_count() {
        let p = predict(&model, &ds, v, QueryMode::TwoHop)?;
        for (a, b) in p.as_slice().iter().zip(full.row(v)) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("max |2-hop query - full graph| over all nodes: {worst:.2e}");

    let v = (0..ds.node_count())
        .max_by_key(|&v| ds.graph.degree(v))
        .unwrap_or(0);
    let sub = khop_subgraph(&ds, v, 2)?;
    println!(
        "node {v}: degree {}, 2-hop subgraph of {} nodes",
        ds.graph.degree(v),
        sub.members.len()
    );
    for mode in QueryMode::ALL {
        let p = predict(&model, &ds, v, mode)?;
        let shown: Vec<String> = p.as_slice().iter().map(|x| format!("{x:.3}")).collect();
        println!(
            "{mode:>9}: [{}] -> class {} (label {})",
            shown.join(", "),
            p.argmax(),
            ds.labels[v]
        );
    }
    Ok(())
}
