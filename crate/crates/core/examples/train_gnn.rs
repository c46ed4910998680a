//! Train every architecture on the target training quarter of a synthetic
//! graph and report inductive accuracy under both query modes.

use gnn_audit::experiment::make_partitions;
use gnn_audit::graph::{generate_synthetic, SyntheticParams};
use gnn_audit::models::{evaluate, train_with_history, Arch, ModelConfig, QueryMode};
use gnn_audit::numerics::RngStream;

fn main() -> gnn_audit::Result<()> {
    let ds = generate_synthetic(&SyntheticParams {
        n: 1200,
        ..Default::default()
    })?;
    let (parts, _) = make_partitions(&ds, None, 7)?;
    let all = |n: usize| (0..n).collect::<Vec<_>>();

    println!(
        "{:<5} {:>10} {:>10} {:>10} {:>10} {:>12}",
        "arch", "train 0hop", "train 2hop", "test 0hop", "test 2hop", "final loss"
    );
    for arch in [Arch::Sage, Arch::Gat, Arch::Gin, Arch::Mlp] {
        let cfg = ModelConfig::new(arch);
        let (model, losses) = train_with_history(
            &cfg,
            &parts.target_train,
            &RngStream::new(7).derive("target-model"),
        )?;
        let tr = all(parts.target_train.node_count());
        let te = all(parts.target_test.node_count());
        println!(
            "{:<5} {:>10.3} {:>10.3} {:>10.3} {:>10.3} {:>12.5}",
            arch,
            evaluate(&model, &parts.target_train, &tr, QueryMode::ZeroHop)?,
            evaluate(&model, &parts.target_train, &tr, QueryMode::TwoHop)?,
            evaluate(&model, &parts.target_test, &te, QueryMode::ZeroHop)?,
            evaluate(&model, &parts.target_test, &te, QueryMode::TwoHop)?,
            losses.last().copied().unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
