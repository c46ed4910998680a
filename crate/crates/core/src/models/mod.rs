//! GraphSAGE, GAT and GIN node classifiers plus the MLP baseline, with
//! full-batch training and 0-hop / 2-hop querying.

mod config;
mod io;
pub(crate) mod layers;
mod model;
mod predict;

pub use config::{Arch, ModelConfig};
pub use model::{model_forward, train, train_with_history, GnnModel};
pub use predict::{
    evaluate, full_graph_posteriors, overfitting_level, predict, predict_nodes, Posteriors,
    QueryMode,
};
