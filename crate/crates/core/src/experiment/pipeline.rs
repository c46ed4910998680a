use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::analysis::{
    group_table, partition_metric, ConfusionCounts, ConfusionRatios, EmbeddingRow, EmbeddingTable,
    GroupTable, GroupingKind,
};
use crate::attack::{
    build_examples, evaluate_attack, train_attack_with, AttackEvaluation, AttackKind, AttackModel,
    FeatureEncoding,
};
use crate::defense::{add_random_edges, DefenseConfig};
use crate::error::{Result, StageContext};
use crate::graph::{induce, make_split_plan, GraphDataset, SplitPlan};
use crate::models::{evaluate, train, Arch, GnnModel, ModelConfig, QueryMode};
use crate::numerics::RngStream;

/// Accuracy of one model on its own train/test partitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelUtility {
    pub arch: Arch,
    pub train_zero_hop: f64,
    pub train_two_hop: f64,
    pub test_zero_hop: f64,
    pub test_two_hop: f64,
}

impl ModelUtility {
    fn measure(model: &GnnModel, train_ds: &GraphDataset, test_ds: &GraphDataset) -> Result<Self> {
        let acc = |ds: &GraphDataset, mode| {
            let all: Vec<usize> = (0..ds.node_count()).collect();
            evaluate(model, ds, &all, mode)
        };
        Ok(ModelUtility {
            arch: model.arch(),
            train_zero_hop: acc(train_ds, QueryMode::ZeroHop)?,
            train_two_hop: acc(train_ds, QueryMode::TwoHop)?,
            test_zero_hop: acc(test_ds, QueryMode::ZeroHop)?,
            test_two_hop: acc(test_ds, QueryMode::TwoHop)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub target: ModelUtility,
    pub shadow: ModelUtility,
    /// Graph-blind MLP trained on the target training split.
    pub baseline_mlp: Option<ModelUtility>,
}

/// Train accuracy minus test accuracy per query mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overfitting {
    pub zero_hop: f64,
    pub two_hop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSizes {
    pub target_train: usize,
    pub target_test: usize,
    pub shadow_train: usize,
    pub shadow_test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub target_nodes: usize,
    pub target_edges: usize,
    pub class_count: usize,
    pub feature_dim: usize,
    /// Edges of the target training graph the target model actually saw.
    pub target_train_edges: usize,
    pub separate_shadow_dataset: bool,
    pub partitions: PartitionSizes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub kind: AttackKind,
    pub encoding: FeatureEncoding,
    pub accuracy: f64,
    pub auc: f64,
    pub confusion: ConfusionCounts,
    pub ratios: ConfusionRatios,
}

impl AttackResult {
    fn new(kind: AttackKind, encoding: FeatureEncoding, e: &AttackEvaluation) -> Self {
        AttackResult {
            kind,
            encoding,
            accuracy: e.accuracy,
            auc: e.auc,
            confusion: e.confusion,
            ratios: e.confusion.ratios(),
        }
    }
}

/// Everything one experiment measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub data: DataSummary,
    pub utility: UtilityReport,
    pub overfitting: Overfitting,
    /// Attacks on the target's posteriors. Under edge addition the target
    /// is the defended one.
    pub attacks: Vec<AttackResult>,
    /// Attacks on one-hot outputs, present when the label-only defense is
    /// configured.
    pub label_only: Option<Vec<AttackResult>>,
    pub grouped: Vec<GroupTable>,
}

impl AuditReport {
    pub fn attack(&self, kind: AttackKind) -> Option<&AttackResult> {
        self.attacks.iter().find(|a| a.kind == kind)
    }

    pub fn label_only_attack(&self, kind: AttackKind) -> Option<&AttackResult> {
        self.label_only.as_ref()?.iter().find(|a| a.kind == kind)
    }

    pub fn group_table(&self, kind: AttackKind, grouping: GroupingKind) -> Option<&GroupTable> {
        self.grouped
            .iter()
            .find(|t| t.attack == kind && t.grouping == grouping)
    }

    /// Scalar results as `(name, value)` pairs in a fixed order.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        let mut utility = |who: &str, u: &ModelUtility| {
            for (k, v) in [
                ("train_zero_hop", u.train_zero_hop),
                ("train_two_hop", u.train_two_hop),
                ("test_zero_hop", u.test_zero_hop),
                ("test_two_hop", u.test_two_hop),
            ] {
                out.push((format!("utility.{who}.{k}"), v));
            }
        };
        utility("target", &self.utility.target);
        utility("shadow", &self.utility.shadow);
        if let Some(b) = &self.utility.baseline_mlp {
            utility("baseline_mlp", b);
        }
        out.push(("overfitting.zero_hop".into(), self.overfitting.zero_hop));
        out.push(("overfitting.two_hop".into(), self.overfitting.two_hop));
        let sections = [
            ("attacks", Some(&self.attacks)),
            ("label_only", self.label_only.as_ref()),
        ];
        for (section, results) in sections {
            for a in results.into_iter().flatten() {
                let p = format!("{section}.{}", a.kind);
                out.push((format!("{p}.accuracy"), a.accuracy));
                out.push((format!("{p}.auc"), a.auc));
                for (k, v) in [
                    ("tp", a.ratios.tp),
                    ("fp", a.ratios.fp),
                    ("tn", a.ratios.tn),
                    ("fn", a.ratios.fn_),
                ] {
                    out.push((format!("{p}.ratio.{k}"), v));
                }
            }
        }
        for t in &self.grouped {
            for r in &t.rows {
                if let Some(auc) = r.auc {
                    out.push((
                        format!("grouped.{}.{}.{}.auc", t.attack, t.grouping, r.group),
                        auc,
                    ));
                }
            }
        }
        out
    }
}

/// A report plus the optional embedding dump.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub report: AuditReport,
    pub embeddings: Vec<EmbeddingTable>,
}

/// The four induced partitions an experiment works on.
#[derive(Clone, Debug)]
pub struct Partitions {
    pub target_train: GraphDataset,
    pub target_test: GraphDataset,
    pub shadow_train: GraphDataset,
    pub shadow_test: GraphDataset,
}

/// Splits the target dataset and, if given, a separate shadow dataset whose
/// shadow halves replace the target's.
pub fn make_partitions(
    target: &GraphDataset,
    shadow: Option<&GraphDataset>,
    seed: u64,
) -> Result<(Partitions, SplitPlan)> {
    let plan = make_split_plan(target, seed)?;
    let (shadow_train, shadow_test) = match shadow {
        None => (
            induce(target, &plan.shadow_train)?,
            induce(target, &plan.shadow_test)?,
        ),
        Some(ds) => {
            let other = make_split_plan(ds, seed)?;
            (
                induce(ds, &other.shadow_train)?,
                induce(ds, &other.shadow_test)?,
            )
        }
    };
    let parts = Partitions {
        target_train: induce(target, &plan.target_train)?,
        target_test: induce(target, &plan.target_test)?,
        shadow_train,
        shadow_test,
    };
    Ok((parts, plan))
}

fn baseline_config(target: &ModelConfig) -> ModelConfig {
    ModelConfig {
        arch: Arch::Mlp,
        hidden_activation: None,
        ..target.clone()
    }
}

struct Attacked {
    result: AttackResult,
    model: AttackModel,
    evaluation: AttackEvaluation,
}

#[allow(clippy::too_many_arguments)]
fn mount_attack(
    cfg: &ExperimentConfig,
    root: &RngStream,
    kind: AttackKind,
    encoding: FeatureEncoding,
    shadow: &GnnModel,
    target: &GnnModel,
    parts: &Partitions,
    target_train: &GraphDataset,
) -> Result<Attacked> {
    let examples = build_examples(
        shadow,
        &parts.shadow_train,
        &parts.shadow_test,
        kind,
        encoding,
    )
    .stage("attack-features")?;
    let label = match encoding {
        FeatureEncoding::Top2 => format!("attack/{kind}"),
        FeatureEncoding::LabelOnly => format!("attack-label-only/{kind}"),
    };
    let model = train_attack_with(
        &examples,
        kind,
        encoding,
        &cfg.attack_training,
        &root.derive(&label),
    )
    .stage("attack-training")?;
    let evaluation = evaluate_attack(&model, target, target_train, &parts.target_test)
        .stage("membership-inference")?;
    Ok(Attacked {
        result: AttackResult::new(kind, encoding, &evaluation),
        model,
        evaluation,
    })
}

/// Runs one experiment and returns its report.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<AuditReport> {
    Ok(run_pipeline_full(cfg)?.report)
}

/// [`run_pipeline`] that also returns attack embeddings when configured.
pub fn run_pipeline_full(cfg: &ExperimentConfig) -> Result<PipelineOutput> {
    cfg.validate().stage("config")?;
    let root = RngStream::new(cfg.master_seed);

    let target_ds = cfg.target_dataset.load().stage("load-target")?;
    let shadow_ds = match &cfg.shadow_dataset {
        Some(src) => Some(src.load().stage("load-shadow")?),
        None => None,
    };
    let (parts, _) =
        make_partitions(&target_ds, shadow_ds.as_ref(), cfg.master_seed).stage("split")?;

    let target_train = match cfg.defense {
        DefenseConfig::EdgeAddition { multiplier } => {
            add_random_edges(&parts.target_train, multiplier, &mut root.derive("defense"))
                .stage("defense")?
        }
        _ => parts.target_train.clone(),
    };

    let target = train(
        &cfg.target_model,
        &target_train,
        &root.derive("target-model"),
    )
    .stage("train-target")?;
    let shadow = train(
        cfg.shadow_model_config(),
        &parts.shadow_train,
        &root.derive("shadow-model"),
    )
    .stage("train-shadow")?;
    let baseline = if cfg.baseline {
        let m = train(
            &baseline_config(&cfg.target_model),
            &target_train,
            &root.derive("baseline-model"),
        )
        .stage("train-baseline")?;
        Some(m)
    } else {
        None
    };

    let utility = (|| -> Result<UtilityReport> {
        Ok(UtilityReport {
            target: ModelUtility::measure(&target, &target_train, &parts.target_test)?,
            shadow: ModelUtility::measure(&shadow, &parts.shadow_train, &parts.shadow_test)?,
            baseline_mlp: baseline
                .as_ref()
                .map(|b| ModelUtility::measure(b, &target_train, &parts.target_test))
                .transpose()?,
        })
    })()
    .stage("utility")?;
    let overfitting = Overfitting {
        zero_hop: utility.target.train_zero_hop - utility.target.test_zero_hop,
        two_hop: utility.target.train_two_hop - utility.target.test_two_hop,
    };

    let mut attacked = Vec::new();
    for &kind in &cfg.attacks {
        attacked.push(mount_attack(
            cfg,
            &root,
            kind,
            FeatureEncoding::Top2,
            &shadow,
            &target,
            &parts,
            &target_train,
        )?);
    }
    let label_only = if cfg.defense == DefenseConfig::LabelOnly {
        let mut v = Vec::new();
        for &kind in &cfg.attacks {
            v.push(
                mount_attack(
                    cfg,
                    &root,
                    kind,
                    FeatureEncoding::LabelOnly,
                    &shadow,
                    &target,
                    &parts,
                    &target_train,
                )?
                .result,
            );
        }
        Some(v)
    } else {
        None
    };

    let mut grouped = Vec::new();
    if cfg.grouping {
        for grouping in GroupingKind::ALL {
            let mut values =
                partition_metric(&target_train, grouping.metric()).stage("analysis")?;
            values
                .extend(partition_metric(&parts.target_test, grouping.metric()).stage("analysis")?);
            let is_member: Vec<bool> = (0..values.len())
                .map(|i| i < target_train.node_count())
                .collect();
            for a in &attacked {
                let scores: Vec<f64> = a
                    .evaluation
                    .member_scores
                    .iter()
                    .chain(&a.evaluation.nonmember_scores)
                    .copied()
                    .collect();
                grouped.push(
                    group_table(a.result.kind, grouping, &values, &scores, &is_member)
                        .stage("analysis")?,
                );
            }
        }
    }

    let embeddings = if cfg.emit_embeddings {
        attacked
            .iter()
            .map(|a| embedding_table(a, &target, &parts, &target_train))
            .collect::<Result<Vec<_>>>()
            .stage("embeddings")?
    } else {
        Vec::new()
    };

    let report = AuditReport {
        config: cfg.clone(),
        master_seed: cfg.master_seed,
        data: DataSummary {
            target_nodes: target_ds.node_count(),
            target_edges: target_ds.graph.edge_count(),
            class_count: target_ds.class_count,
            feature_dim: target_ds.feature_dim(),
            target_train_edges: target_train.graph.edge_count(),
            separate_shadow_dataset: shadow_ds.is_some(),
            partitions: PartitionSizes {
                target_train: parts.target_train.node_count(),
                target_test: parts.target_test.node_count(),
                shadow_train: parts.shadow_train.node_count(),
                shadow_test: parts.shadow_test.node_count(),
            },
        },
        utility,
        overfitting,
        attacks: attacked.into_iter().map(|a| a.result).collect(),
        label_only,
        grouped,
    };
    Ok(PipelineOutput { report, embeddings })
}

fn embedding_table(
    a: &Attacked,
    target: &GnnModel,
    parts: &Partitions,
    target_train: &GraphDataset,
) -> Result<EmbeddingTable> {
    let kind = a.result.kind;
    let examples = build_examples(
        target,
        target_train,
        &parts.target_test,
        kind,
        FeatureEncoding::Top2,
    )?;
    let hidden = a.model.embeddings(&examples)?;
    let m = target_train.node_count();
    let scores: Vec<f64> = a
        .evaluation
        .member_scores
        .iter()
        .chain(&a.evaluation.nonmember_scores)
        .copied()
        .collect();
    let rows = (0..examples.len())
        .map(|i| EmbeddingRow {
            member: i < m,
            node: if i < m { i } else { i - m },
            score: scores[i],
            values: hidden.row(i).to_vec(),
        })
        .collect();
    Ok(EmbeddingTable { attack: kind, rows })
}
