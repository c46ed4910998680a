//! Compare the undefended target with random edge addition and label-only
//! output.

use gnn_audit::attack::AttackKind;
use gnn_audit::defense::DefenseConfig;
use gnn_audit::experiment::{run_pipeline, ExperimentConfig};

fn main() -> gnn_audit::Result<()> {
    let base = ExperimentConfig {
        master_seed: 2,
        grouping: false,
        ..Default::default()
    };
    println!("{:<22} {:>10} {:>14}", "defense", "combined", "target 2hop");
    for defense in [
        DefenseConfig::None,
        DefenseConfig::EdgeAddition { multiplier: 2.0 },
        DefenseConfig::EdgeAddition { multiplier: 20.0 },
    ] {
        let report = run_pipeline(&ExperimentConfig {
            defense,
            ..base.clone()
        })?;
        let label = match defense {
            DefenseConfig::EdgeAddition { multiplier } => format!("edge addition x{multiplier}"),
            other => other.name().to_string(),
        };
        let acc = report
            .attack(AttackKind::Combined)
            .map_or(f64::NAN, |a| a.accuracy);
        println!(
            "{label:<22} {acc:>10.3} {:>14.3}",
            report.utility.target.test_two_hop
        );
    }

    // The label-only run also carries the posterior-based attacks on the
    // same target, so one run gives both numbers.
    let report = run_pipeline(&ExperimentConfig {
        defense: DefenseConfig::LabelOnly,
        attacks: vec![AttackKind::Combined],
        ..base
    })?;
    let before = report
        .attack(AttackKind::Combined)
        .map_or(f64::NAN, |a| a.accuracy);
    let after = report
        .label_only_attack(AttackKind::Combined)
        .map_or(f64::NAN, |a| a.accuracy);
    println!("label only: combined {before:.3} -> {after:.3}");
    Ok(())
}
