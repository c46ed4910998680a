use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Activation;

/// Model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    /// GraphSAGE with mean aggregation.
    Sage,
    /// Multi-head graph attention.
    Gat,
    /// Graph isomorphism network.
    Gin,
    /// Graph-blind multilayer perceptron baseline.
    Mlp,
}

impl Arch {
    pub const GRAPH_ARCHS: [Arch; 3] = [Arch::Sage, Arch::Gat, Arch::Gin];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Sage => "sage",
            Arch::Gat => "gat",
            Arch::Gin => "gin",
            Arch::Mlp => "mlp",
        }
    }

    pub fn default_hidden_activation(self) -> Activation {
        match self {
            Arch::Gat => Activation::Elu,
            _ => Activation::Relu,
        }
    }

    pub fn uses_graph(self) -> bool {
        self != Arch::Mlp
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sage" | "graphsage" => Ok(Arch::Sage),
            "gat" => Ok(Arch::Gat),
            "gin" => Ok(Arch::Gin),
            "mlp" => Ok(Arch::Mlp),
            _ => Err(Error::invalid(format!("unknown architecture `{s}`"))),
        }
    }
}

/// Architecture and training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub layers: usize,
    pub hidden: usize,
    /// Attention heads on hidden layers and on the output layer (GAT only).
    pub heads: (usize, usize),
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Depth of the perceptron inside each GIN layer.
    pub gin_mlp_layers: usize,
    /// Overrides the architecture's default hidden activation.
    pub hidden_activation: Option<Activation>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::Sage,
            layers: 2,
            hidden: 32,
            heads: (2, 1),
            dropout: 0.5,
            lr: 0.003,
            epochs: 200,
            gin_mlp_layers: 2,
            hidden_activation: None,
        }
    }
}

impl ModelConfig {
    pub fn new(arch: Arch) -> Self {
        ModelConfig {
            arch,
            ..Default::default()
        }
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
            .unwrap_or_else(|| self.arch.default_hidden_activation())
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::invalid("layers must be >= 1"));
        }
        if self.hidden < 1 {
            return Err(Error::invalid("hidden must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout must lie in [0, 1)"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        if self.arch == Arch::Gat {
            if self.heads.0 < 1 || self.heads.1 < 1 {
                return Err(Error::invalid("GAT head counts must be >= 1"));
            }
            if self.hidden % self.heads.0 != 0 {
                return Err(Error::invalid(format!(
                    "hidden {} not divisible by {} heads",
                    self.hidden, self.heads.0
                )));
            }
        }
        if self.arch == Arch::Gin && self.gin_mlp_layers < 1 {
            return Err(Error::invalid("gin_mlp_layers must be >= 1"));
        }
        Ok(())
    }
}
