mod common;

use std::fs;

use common::{brute_auc, small_config};
use gnn_audit::analysis::{emit_report, GroupingKind};
use gnn_audit::attack::{
    build_attack_training_set, evaluate_attack, infer_membership, query_features, train_attack,
    AttackKind, FeatureEncoding,
};
use gnn_audit::defense::DefenseConfig;
use gnn_audit::experiment::{
    make_partitions, run_pipeline, run_pipeline_full, AuditReport, ExperimentConfig,
};
use gnn_audit::graph::{generate_synthetic, SyntheticParams};
use gnn_audit::models::{train, Arch, ModelConfig};
use gnn_audit::numerics::RngStream;

#[test]
fn small_run_produces_a_complete_report() {
    let r = run_pipeline(&small_config(1)).unwrap();
    assert_eq!(r.attacks.len(), 3);
    assert!(r.label_only.is_none());
    assert_eq!(r.grouped.len(), 3 * GroupingKind::ALL.len());
    assert!(r.utility.baseline_mlp.is_some());
    let p = &r.data.partitions;
    assert_eq!(
        p.target_train + p.target_test + p.shadow_train + p.shadow_test,
        400
    );
    for a in &r.attacks {
        assert!((0.0..=1.0).contains(&a.accuracy) && (0.0..=1.0).contains(&a.auc));
        assert_eq!(a.confusion.total() as usize, p.target_train + p.target_test);
        assert!((a.confusion.accuracy() - a.accuracy).abs() < 1e-12);
    }
    let names: Vec<String> = r.metrics().into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"attacks.combined.accuracy".to_string()));
    assert!(names.contains(&"overfitting.two_hop".to_string()));
}

#[test]
fn same_config_gives_identical_report() {
    let a = run_pipeline(&small_config(3)).unwrap();
    let b = run_pipeline(&small_config(3)).unwrap();
    assert_eq!(a, b);
    let c = run_pipeline(&small_config(4)).unwrap();
    assert_ne!(a.attacks, c.attacks);
}

#[test]
fn label_only_defense_adds_one_hot_results() {
    let cfg = ExperimentConfig {
        defense: DefenseConfig::LabelOnly,
        ..small_config(2)
    };
    let defended = run_pipeline(&cfg).unwrap();
    let plain = run_pipeline(&small_config(2)).unwrap();
    assert_eq!(defended.attacks, plain.attacks);
    let lo = defended.label_only.as_ref().unwrap();
    assert_eq!(lo.len(), 3);
    assert!(lo.iter().all(|a| a.encoding == FeatureEncoding::LabelOnly));
}

#[test]
fn edge_addition_changes_target_graph_only() {
    let cfg = ExperimentConfig {
        defense: DefenseConfig::EdgeAddition { multiplier: 2.0 },
        ..small_config(2)
    };
    let defended = run_pipeline(&cfg).unwrap();
    let plain = run_pipeline(&small_config(2)).unwrap();
    let added = defended.data.target_train_edges - plain.data.target_train_edges;
    assert_eq!(added, 2 * plain.data.target_train_edges);
    assert_eq!(defended.utility.shadow, plain.utility.shadow);
}

#[test]
fn report_files_round_trip_and_repeat_exactly() {
    let out = run_pipeline_full(&ExperimentConfig {
        emit_embeddings: true,
        ..small_config(5)
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = emit_report(&out.report, &out.embeddings, dir.path().join("a")).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let back: AuditReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, out.report);

    let again = emit_report(&out.report, &out.embeddings, dir.path().join("b")).unwrap();
    assert_eq!(fs::read(&again).unwrap(), text.as_bytes());

    let tables = dir.path().join("a/tables");
    let count_rows = |name: &str| {
        let mut r = csv::Reader::from_path(tables.join(name)).unwrap();
        r.records().count()
    };
    assert_eq!(count_rows("utility.csv"), 3);
    assert_eq!(count_rows("confusion.csv"), 3);
    assert_eq!(count_rows("grouped_combined_degree_percentile.csv"), 4);
    let p = &out.report.data.partitions;
    let mut emb = csv::Reader::from_path(dir.path().join("a/embeddings.csv")).unwrap();
    assert_eq!(emb.records().count(), 3 * (p.target_train + p.target_test));
}

#[test]
fn combined_posterior_attack_needs_members_to_score_higher() {
    let ds = generate_synthetic(&SyntheticParams {
        n: 400,
        dim: 32,
        ..Default::default()
    })
    .unwrap();
    let (parts, _) = make_partitions(&ds, None, 8).unwrap();
    let cfg = ModelConfig {
        epochs: 40,
        ..ModelConfig::new(Arch::Sage)
    };
    let target = train(&cfg, &parts.target_train, &RngStream::new(1)).unwrap();
    let shadow = train(&cfg, &parts.shadow_train, &RngStream::new(2)).unwrap();
    let examples = build_attack_training_set(
        &shadow,
        &parts.shadow_train,
        &parts.shadow_test,
        AttackKind::Combined,
    )
    .unwrap();
    let attack = train_attack(&examples, AttackKind::Combined, &RngStream::new(3)).unwrap();
    let e = evaluate_attack(&attack, &target, &parts.target_train, &parts.target_test).unwrap();

    // Identities between the evaluation's fields.
    assert_eq!(e.member_scores.len(), parts.target_train.node_count());
    assert_eq!(e.auc, brute_auc(&e.member_scores, &e.nonmember_scores));
    assert_eq!(
        e.confusion.tp + e.confusion.fn_,
        e.member_scores.len() as u64
    );
    assert_eq!(
        e.confusion.tp,
        e.member_scores.iter().filter(|&&s| s > 0.5).count() as u64
    );
    let (label, score) = infer_membership(&attack, &target, &parts.target_train, 0).unwrap();
    assert_eq!(score, e.member_scores[0]);
    assert_eq!(label.is_member(), score > 0.5);
}

#[test]
fn mlp_target_answers_both_query_modes_alike() {
    let ds = generate_synthetic(&SyntheticParams {
        n: 200,
        dim: 16,
        intra_p: 0.05,
        ..Default::default()
    })
    .unwrap();
    let cfg = ModelConfig {
        epochs: 20,
        ..ModelConfig::new(Arch::Mlp)
    };
    let m = train(&cfg, &ds, &RngStream::new(0)).unwrap();
    let nodes: Vec<usize> = (0..ds.node_count()).collect();
    for (f0, f2) in
        query_features(&m, &ds, &nodes, AttackKind::Combined, FeatureEncoding::Top2).unwrap()
    {
        assert_eq!(f0.unwrap(), f2.unwrap());
    }
}
