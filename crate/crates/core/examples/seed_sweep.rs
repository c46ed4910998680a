//! Run a config over several seeds, write per-seed reports and the
//! aggregate, and print the headline means.
//!
//! ```text
//! AUDIT_THREADS=2 cargo run --release --example seed_sweep -- configs/default.json 3
//! ```

use gnn_audit::experiment::{emit_sweep, sweep, ExperimentConfig};

fn main() -> gnn_audit::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let seeds = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let result = sweep(&cfg, seeds)?;
    let out = std::env::temp_dir().join("gnn-audit-sweep");
    let path = emit_sweep(&result, &out)?;
    println!("aggregate written to {}", path.display());
    for (name, m) in &result.aggregate.metrics {
        if name.starts_with("attacks.") && (name.ends_with(".accuracy") || name.ends_with(".auc")) {
            println!("{name:<32} {:.3} +- {:.3}", m.mean, m.std);
        }
    }
    Ok(())
}
