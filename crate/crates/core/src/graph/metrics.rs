use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{khop_subgraph, GraphDataset};
use crate::error::{Error, Result};

/// Per-node structural/feature properties used to group attack results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeMetric {
    Degree,
    EgoDensity,
    FeatureSimilarity,
}

impl NodeMetric {
    pub const ALL: [NodeMetric; 3] = [
        NodeMetric::Degree,
        NodeMetric::EgoDensity,
        NodeMetric::FeatureSimilarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeMetric::Degree => "degree",
            NodeMetric::EgoDensity => "ego_density",
            NodeMetric::FeatureSimilarity => "feature_similarity",
        }
    }
}

impl fmt::Display for NodeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown node metric `{s}`")))
    }
}

/// Cosine similarity, `0` when either vector is all zeros.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Mean cosine similarity between `x_v` and the features of the other nodes
/// of its 2-hop subgraph. With `include_center`, `v` itself joins the
/// average. Isolated nodes score `0` either way.
pub fn feature_similarity(dataset: &GraphDataset, v: usize, include_center: bool) -> Result<f64> {
    let sub = khop_subgraph(dataset, v, 2)?;
    if sub.members.len() <= 1 {
        return Ok(0.0);
    }
    let xv = dataset.features.row(v);
    let mut sum = 0.0;
    let mut count = 0usize;
    for &u in &sub.members {
        if u == v && !include_center {
            continue;
        }
        sum += cosine_similarity(xv, dataset.features.row(u));
        count += 1;
    }
    Ok(sum / count as f64)
}

pub fn node_metric(dataset: &GraphDataset, v: usize, kind: NodeMetric) -> Result<f64> {
    dataset.check_node(v)?;
    match kind {
        NodeMetric::Degree => Ok(dataset.graph.degree(v) as f64),
        NodeMetric::EgoDensity => {
            let sub = khop_subgraph(dataset, v, 2)?;
            let m = sub.members.len();
            if m <= 1 {
                return Ok(0.0);
            }
            let pairs = (m * (m - 1) / 2) as f64;
            Ok(sub.graph.edge_count() as f64 / pairs)
        }
        NodeMetric::FeatureSimilarity => feature_similarity(dataset, v, false),
    }
}
