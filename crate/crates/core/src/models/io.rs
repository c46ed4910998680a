use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::GnnModel;
use crate::codec::TensorBlob;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

const FORMAT: &str = "gnn-audit/model/v1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    config: ModelConfig,
    in_dim: usize,
    class_count: usize,
    parameters: Vec<TensorBlob>,
}

impl GnnModel {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: FORMAT.into(),
            config: self.config().clone(),
            in_dim: self.in_dim(),
            class_count: self.class_count(),
            parameters: self
                .named_parameters()
                .into_iter()
                .map(|(n, p)| TensorBlob::encode(n, &p.value))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::invalid(format!(
                "unsupported model format `{}`",
                file.format
            )));
        }
        let mut model = GnnModel::new(
            &file.config,
            file.in_dim,
            file.class_count,
            &RngStream::new(0),
        )?;
        let names: Vec<String> = model
            .named_parameters()
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        if names.len() != file.parameters.len() {
            return Err(Error::shape(format!(
                "model file has {} tensors, architecture needs {}",
                file.parameters.len(),
                names.len()
            )));
        }
        for ((name, slot), blob) in names
            .iter()
            .zip(model.parameters_mut())
            .zip(&file.parameters)
        {
            if &blob.name != name {
                return Err(Error::invalid(format!(
                    "expected tensor `{name}`, found `{}`",
                    blob.name
                )));
            }
            let value = blob.decode()?;
            if value.shape() != slot.shape() {
                return Err(Error::shape(format!("tensor `{name}` has wrong shape")));
            }
            slot.value = value;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
