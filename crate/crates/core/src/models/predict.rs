use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::GnnModel;
use crate::error::{Error, Result};
use crate::graph::{khop_subgraph, GraphDataset};
use crate::numerics::{row_softmax, softmax_in_place, Matrix};

/// How much of a node's neighborhood a query exposes to the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// Only `x_v`, wrapped in a single node with a self-loop.
    ZeroHop,
    /// The complete induced 2-hop subgraph around `v`.
    TwoHop,
}

impl QueryMode {
    pub const ALL: [QueryMode; 2] = [QueryMode::ZeroHop, QueryMode::TwoHop];

    pub fn name(self) -> &'static str {
        match self {
            QueryMode::ZeroHop => "zero_hop",
            QueryMode::TwoHop => "two_hop",
        }
    }
}

impl fmt::Display for QueryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_hop" | "0hop" | "0-hop" => Ok(QueryMode::ZeroHop),
            "two_hop" | "2hop" | "2-hop" => Ok(QueryMode::TwoHop),
            _ => Err(Error::invalid(format!("unknown query mode `{s}`"))),
        }
    }
}

/// A probability vector over classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Posteriors(pub(crate) Vec<f64>);

impl Posteriors {
    /// Checks the entries form a probability vector (sum 1 ± 1e-9).
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("posterior entry outside [0,1]"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("posteriors sum to {s}")));
        }
        Ok(Posteriors(p))
    }

    pub(crate) fn from_logits(logits: &[f64]) -> Self {
        let mut p = logits.to_vec();
        softmax_in_place(&mut p);
        Posteriors(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Queries `model` about node `v` of `dataset` (dropout off).
pub fn predict(
    model: &GnnModel,
    dataset: &GraphDataset,
    v: usize,
    mode: QueryMode,
) -> Result<Posteriors> {
    dataset.check_node(v)?;
    match mode {
        QueryMode::ZeroHop => {
            let q = dataset.zero_hop_view(v)?;
            let logits = model.logits(&q)?;
            Ok(Posteriors::from_logits(logits.row(0)))
        }
        QueryMode::TwoHop => {
            let sub = khop_subgraph(dataset, v, 2)?;
            let x = dataset.features.select_rows(&sub.members);
            let logits = model.forward(&sub.graph, &x)?;
            Ok(Posteriors::from_logits(logits.row(sub.center)))
        }
    }
}

/// [`predict`] for many nodes, evaluated in parallel, returned in input order.
pub fn predict_nodes(
    model: &GnnModel,
    dataset: &GraphDataset,
    nodes: &[usize],
    mode: QueryMode,
) -> Result<Vec<Posteriors>> {
    nodes
        .par_iter()
        .map(|&v| predict(model, dataset, v, mode))
        .collect()
}

/// Posteriors of every node from one forward pass over the whole graph.
pub fn full_graph_posteriors(model: &GnnModel, dataset: &GraphDataset) -> Result<Matrix> {
    Ok(row_softmax(&model.logits(dataset)?))
}

/// Fraction of `nodes` whose predicted class equals the label.
pub fn evaluate(
    model: &GnnModel,
    dataset: &GraphDataset,
    nodes: &[usize],
    mode: QueryMode,
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::invalid("evaluate: empty node set"));
    }
    let posts = predict_nodes(model, dataset, nodes, mode)?;
    let correct = posts
        .iter()
        .zip(nodes)
        .filter(|(p, &v)| p.argmax() == dataset.labels[v])
        .count();
    Ok(correct as f64 / nodes.len() as f64)
}

/// Accuracy on every node of the training dataset minus accuracy on every
/// node of the test dataset.
pub fn overfitting_level(
    model: &GnnModel,
    train_ds: &GraphDataset,
    test_ds: &GraphDataset,
    mode: QueryMode,
) -> Result<f64> {
    let all = |ds: &GraphDataset| (0..ds.node_count()).collect::<Vec<_>>();
    Ok(evaluate(model, train_ds, &all(train_ds), mode)?
        - evaluate(model, test_ds, &all(test_ds), mode)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.25, 0.25, 0.25, 0.25]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.3, 0.1, 0.3, 0.3]), 0);
    }

    #[test]
    fn posterior_validation() {
        assert!(Posteriors::new(vec![0.5, 0.5]).is_ok());
        assert!(Posteriors::new(vec![0.5, 0.6]).is_err());
        assert!(Posteriors::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("2-hop".parse::<QueryMode>().unwrap(), QueryMode::TwoHop);
        assert!("1hop".parse::<QueryMode>().is_err());
    }
}
