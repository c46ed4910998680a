use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{AttackKind, AttackTrainConfig};
use crate::defense::DefenseConfig;
use crate::error::{Error, Result};
use crate::graph::{generate_synthetic, load_dataset, GraphDataset, SyntheticParams};
use crate::models::{Arch, ModelConfig};

/// Where a dataset comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// A directory in the on-disk dataset format.
    Path(PathBuf),
    /// Generated on the fly.
    Synthetic(SyntheticParams),
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticParams::default())
    }
}

impl DatasetSource {
    pub fn load(&self) -> Result<GraphDataset> {
        match self {
            DatasetSource::Path(p) => load_dataset(p),
            DatasetSource::Synthetic(params) => generate_synthetic(params),
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        match self {
            DatasetSource::Path(p) if !p.is_dir() => Err(Error::config(
                format!("{field}.path"),
                format!("dataset directory {} does not exist", p.display()),
            )),
            DatasetSource::Path(_) => Ok(()),
            DatasetSource::Synthetic(params) => params
                .validate()
                .map_err(|e| Error::config(format!("{field}.synthetic"), e.to_string())),
        }
    }
}

/// One complete audit experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub target_dataset: DatasetSource,
    /// `None` trains the shadow model on the other half of the target
    /// dataset.
    pub shadow_dataset: Option<DatasetSource>,
    pub target_model: ModelConfig,
    /// `None` copies the target model configuration.
    pub shadow_model: Option<ModelConfig>,
    /// Also train a graph-blind MLP on the target training split.
    pub baseline: bool,
    pub attacks: Vec<AttackKind>,
    pub attack_training: AttackTrainConfig,
    pub defense: DefenseConfig,
    /// Compute grouped AUC tables over node properties.
    pub grouping: bool,
    /// Write attack hidden-layer embeddings next to the report.
    pub emit_embeddings: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            target_dataset: DatasetSource::default(),
            shadow_dataset: None,
            target_model: ModelConfig::new(Arch::Sage),
            shadow_model: None,
            baseline: true,
            attacks: AttackKind::ALL.to_vec(),
            attack_training: AttackTrainConfig::default(),
            defense: DefenseConfig::None,
            grouping: true,
            emit_embeddings: false,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a JSON config file. Every failure is a
    /// [`Error::Config`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            Error::config("<config>", format!("cannot read {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shadow_model_config(&self) -> &ModelConfig {
        self.shadow_model.as_ref().unwrap_or(&self.target_model)
    }

    pub fn validate(&self) -> Result<()> {
        self.target_dataset.validate("target_dataset")?;
        if let Some(s) = &self.shadow_dataset {
            s.validate("shadow_dataset")?;
        }
        self.target_model
            .validate()
            .map_err(|e| Error::config("target_model", e.to_string()))?;
        if let Some(m) = &self.shadow_model {
            m.validate()
                .map_err(|e| Error::config("shadow_model", e.to_string()))?;
        }
        if self.attacks.is_empty() {
            return Err(Error::config(
                "attacks",
                "at least one attack kind is required",
            ));
        }
        let mut unique = self.attacks.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != self.attacks.len() {
            return Err(Error::config("attacks", "attack kinds must not repeat"));
        }
        let at = &self.attack_training;
        if at.hidden == 0 || at.branch_width == 0 {
            return Err(Error::config("attack_training", "widths must be positive"));
        }
        if !(at.lr.is_finite() && at.lr > 0.0) {
            return Err(Error::config("attack_training.lr", "must be positive"));
        }
        self.defense.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.shadow_model_config().arch, Arch::Sage);
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            shadow_model: Some(ModelConfig {
                hidden: 16,
                ..ModelConfig::new(Arch::Gat)
            }),
            defense: DefenseConfig::EdgeAddition { multiplier: 2.0 },
            ..Default::default()
        };
        assert_eq!(
            ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(),
            cfg
        );
    }

    #[test]
    fn missing_path_names_the_field() {
        let err = ExperimentConfig::from_json(r#"{"target_dataset": {"path": "/no/such/dir"}}"#)
            .unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "target_dataset.path"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_values_are_config_errors() {
        for doc in [
            r#"{"attacks": []}"#,
            r#"{"unknown_knob": 1}"#,
            r#"{"target_dataset": {"synthetic": {"intra_p": 1.2}}}"#,
            r#"{"defense": {"kind": "edge_addition", "multiplier": -1}}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json(doc), Err(Error::Config { .. })),
                "{doc}"
            );
        }
    }
}
