//! Command-line front end. Standard output only ever carries a path or a
//! JSON document; progress goes to standard error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{emit_report, ConfusionCounts, ConfusionRatios};
use crate::attack::{
    build_examples, evaluate_attack, train_attack_with, AttackKind, AttackModel, AttackTrainConfig,
    FeatureEncoding,
};
use crate::codec::to_json_fixed;
use crate::error::{Error, Result};
use crate::experiment::{emit_sweep, run_pipeline_full, sweep, ExperimentConfig};
use crate::graph::{
    generate_synthetic, induce, load_dataset, make_split_plan, write_dataset, GraphDataset,
    SyntheticParams,
};
use crate::models::{train, Arch, GnnModel, ModelConfig};
use crate::numerics::RngStream;

/// Exit status for bad flags or configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a failure while running.
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gnn-audit",
    version,
    about = "Membership inference audits for graph neural networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic block-model dataset.
    Synth(SynthArgs),
    /// Split a dataset into target/shadow train/test partitions.
    Split(SplitArgs),
    /// Train the target model on a partition.
    TrainTarget(TrainArgs),
    /// Train the shadow model on a partition.
    TrainShadow(TrainArgs),
    /// Train an attack model from a shadow model and its partitions.
    Attack(AttackArgs),
    /// Evaluate an attack model against a target model.
    Evaluate(EvaluateArgs),
    /// Run a full experiment from a config file.
    Run(RunArgs),
    /// Run a config over several seeds and aggregate.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3000)]
    pub n: usize,
    #[arg(long, default_value_t = 6)]
    pub classes: usize,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.01)]
    pub intra_p: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub inter_p: f64,
    #[arg(long, alias = "noise", default_value_t = 0.5)]
    pub feature_noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Partition directory to train on.
    #[arg(long)]
    pub train: PathBuf,
    /// JSON model config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub arch: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub shadow_model: PathBuf,
    #[arg(long)]
    pub shadow_train: PathBuf,
    #[arg(long)]
    pub shadow_test: PathBuf,
    #[arg(long, default_value = "combined")]
    pub kind: String,
    /// Train on one-hot predicted labels instead of top-2 posteriors.
    #[arg(long)]
    pub label_only: bool,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub attack: PathBuf,
    #[arg(long)]
    pub target_model: PathBuf,
    #[arg(long)]
    pub target_train: PathBuf,
    #[arg(long)]
    pub target_test: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn require_dir(path: &Path, flag: &str) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::config(
            flag,
            format!("directory {} does not exist", path.display()),
        ))
    }
}

fn require_file(path: &Path, flag: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(
            flag,
            format!("file {} does not exist", path.display()),
        ))
    }
}

fn output_dir(cli: Option<&PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli.cloned()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("audit-out"))
}

fn cmd_synth(a: &SynthArgs) -> Result<String> {
    let params = SyntheticParams {
        n: a.n,
        classes: a.classes,
        dim: a.dim,
        intra_p: a.intra_p,
        inter_p: a.inter_p,
        feature_noise: a.feature_noise,
        seed: a.seed,
    };
    params
        .validate()
        .map_err(|e| Error::config("synth", e.to_string()))?;
    let ds = generate_synthetic(&params)?;
    write_dataset(&ds, &a.out)?;
    eprintln!(
        "synth: {} nodes, {} edges",
        ds.node_count(),
        ds.graph.edge_count()
    );
    Ok(a.out.display().to_string())
}

fn cmd_split(a: &SplitArgs) -> Result<String> {
    require_dir(&a.dataset, "--dataset")?;
    let ds = load_dataset(&a.dataset)?;
    let plan = make_split_plan(&ds, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let names = ["target_train", "target_test", "shadow_train", "shadow_test"];
    for (name, nodes) in names.iter().zip(plan.sets()) {
        write_dataset(&induce(&ds, nodes)?, a.out.join(name))?;
    }
    let path = a.out.join("split.json");
    fs::write(&path, serde_json::to_string_pretty(&plan)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    Ok(path.display().to_string())
}

fn model_config(a: &TrainArgs) -> Result<ModelConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            require_file(p, "--config")?;
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::config("--config", e.to_string()))?
        }
        None => ModelConfig::default(),
    };
    if let Some(arch) = &a.arch {
        cfg.arch = arch
            .parse::<Arch>()
            .map_err(|e| Error::config("--arch", e.to_string()))?;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = a.layers {
        cfg.layers = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.dropout {
        cfg.dropout = v;
    }
    cfg.validate()
        .map_err(|e| Error::config("model", e.to_string()))?;
    Ok(cfg)
}

fn cmd_train(a: &TrainArgs, role: &str) -> Result<String> {
    require_dir(&a.train, "--train")?;
    let cfg = model_config(a)?;
    let ds = load_dataset(&a.train)?;
    eprintln!("{role}: training {} on {} nodes", cfg.arch, ds.node_count());
    let model = train(&cfg, &ds, &RngStream::new(a.seed).derive(role))?;
    model.save(&a.out)?;
    Ok(a.out.display().to_string())
}

fn load_partition(path: &Path, flag: &str) -> Result<GraphDataset> {
    require_dir(path, flag)?;
    load_dataset(path)
}

fn load_model(path: &Path, flag: &str) -> Result<GnnModel> {
    require_file(path, flag)?;
    GnnModel::load(path)
}

fn cmd_attack(a: &AttackArgs) -> Result<String> {
    let kind: AttackKind = a
        .kind
        .parse()
        .map_err(|e: Error| Error::config("--kind", e.to_string()))?;
    let shadow = load_model(&a.shadow_model, "--shadow-model")?;
    let train_ds = load_partition(&a.shadow_train, "--shadow-train")?;
    let test_ds = load_partition(&a.shadow_test, "--shadow-test")?;
    let encoding = if a.label_only {
        FeatureEncoding::LabelOnly
    } else {
        FeatureEncoding::Top2
    };
    let examples = build_examples(&shadow, &train_ds, &test_ds, kind, encoding)?;
    let cfg = AttackTrainConfig {
        epochs: a.epochs,
        ..Default::default()
    };
    let label = match encoding {
        FeatureEncoding::Top2 => format!("attack/{kind}"),
        FeatureEncoding::LabelOnly => format!("attack-label-only/{kind}"),
    };
    eprintln!("attack: training {kind} on {} examples", examples.len());
    let model = train_attack_with(
        &examples,
        kind,
        encoding,
        &cfg,
        &RngStream::new(a.seed).derive(&label),
    )?;
    model.save(&a.out)?;
    Ok(a.out.display().to_string())
}

#[derive(Serialize)]
struct EvaluationSummary {
    kind: AttackKind,
    encoding: FeatureEncoding,
    accuracy: f64,
    auc: f64,
    confusion: ConfusionCounts,
    ratios: ConfusionRatios,
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<String> {
    require_file(&a.attack, "--attack")?;
    let attack = AttackModel::load(&a.attack)?;
    let target = load_model(&a.target_model, "--target-model")?;
    let train_ds = load_partition(&a.target_train, "--target-train")?;
    let test_ds = load_partition(&a.target_test, "--target-test")?;
    let e = evaluate_attack(&attack, &target, &train_ds, &test_ds)?;
    let summary = EvaluationSummary {
        kind: attack.kind(),
        encoding: attack.encoding(),
        accuracy: e.accuracy,
        auc: e.auc,
        confusion: e.confusion,
        ratios: e.confusion.ratios(),
    };
    Ok(to_json_fixed(&summary)?.trim_end().to_string())
}

fn cmd_run(a: &RunArgs) -> Result<String> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    let out = output_dir(a.out.as_ref(), &cfg);
    eprintln!("run: seed {} -> {}", cfg.master_seed, out.display());
    let output = run_pipeline_full(&cfg)?;
    let path = emit_report(&output.report, &output.embeddings, &out)?;
    eprintln!("run: done");
    Ok(path.display().to_string())
}

fn cmd_sweep(a: &SweepArgs) -> Result<String> {
    let cfg = ExperimentConfig::load(&a.config)?;
    if a.seeds == 0 {
        return Err(Error::config("--seeds", "must be at least 1"));
    }
    let out = output_dir(a.out.as_ref(), &cfg);
    eprintln!(
        "sweep: {} seeds from {} -> {}",
        a.seeds,
        cfg.master_seed,
        out.display()
    );
    let result = sweep(&cfg, a.seeds)?;
    let path = emit_sweep(&result, &out)?;
    eprintln!("sweep: done");
    Ok(path.display().to_string())
}

/// Runs one parsed command and returns what it prints on standard output.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Split(a) => cmd_split(a),
        Command::TrainTarget(a) => cmd_train(a, "target-model"),
        Command::TrainShadow(a) => cmd_train(a, "shadow-model"),
        Command::Attack(a) => cmd_attack(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Exit status for an error: configuration problems are distinguished from
/// runtime failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Stage { source, .. } if matches!(**source, Error::Config { .. }) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            println!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
