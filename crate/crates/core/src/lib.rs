//! Membership inference auditing for inductive graph neural networks.
//!
//! The crate trains GraphSAGE, GAT, GIN and MLP node classifiers from
//! scratch, attacks them with shadow-model membership inference using 0-hop,
//! 2-hop and combined queries, groups the results by node properties and
//! evaluates two defenses.

pub mod analysis;
pub mod attack;
pub mod cli;
pub mod codec;
pub mod defense;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod numerics;

pub use error::{Error, Result};
