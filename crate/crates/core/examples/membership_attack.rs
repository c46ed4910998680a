//! The three-stage attack by hand: shadow training, attack training and
//! membership inference against the target.

use gnn_audit::attack::{
    build_attack_training_set, evaluate_attack, infer_membership, train_attack, AttackKind,
};
use gnn_audit::experiment::make_partitions;
use gnn_audit::graph::{generate_synthetic, SyntheticParams};
use gnn_audit::models::{overfitting_level, train, Arch, ModelConfig, QueryMode};
use gnn_audit::numerics::RngStream;

fn main() -> gnn_audit::Result<()> {
    let seed = 11;
    let root = RngStream::new(seed);
    let ds = generate_synthetic(&SyntheticParams::default())?;
    let (parts, _) = make_partitions(&ds, None, seed)?;

    let cfg = ModelConfig::new(Arch::Sage);
    let target = train(&cfg, &parts.target_train, &root.derive("target-model"))?;
    let shadow = train(&cfg, &parts.shadow_train, &root.derive("shadow-model"))?;
    println!(
        "target overfitting (2-hop): {:.3}",
        overfitting_level(
            &target,
            &parts.target_train,
            &parts.target_test,
            QueryMode::TwoHop
        )?
    );

    for kind in AttackKind::ALL {
        let examples =
            build_attack_training_set(&shadow, &parts.shadow_train, &parts.shadow_test, kind)?;
        let attack = train_attack(&examples, kind, &root.derive(&format!("attack/{kind}")))?;
        let e = evaluate_attack(&attack, &target, &parts.target_train, &parts.target_test)?;
        let r = e.confusion.ratios();
        println!(
            "{kind:>9}: accuracy {:.3}, auc {:.3}, tp {:.3} fp {:.3} tn {:.3} fn {:.3}",
            e.accuracy, e.auc, r.tp, r.fp, r.tn, r.fn_
        );
        if kind == AttackKind::Combined {
            let (label, score) = infer_membership(&attack, &target, &parts.target_train, 0)?;
            println!("  target-train node 0 -> {label:?} (score {score:.3})");
        }
    }
    Ok(())
}
