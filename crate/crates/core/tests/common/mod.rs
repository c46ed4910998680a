#![allow(dead_code)]

use gnn_audit::attack::AttackTrainConfig;
use gnn_audit::experiment::{DatasetSource, ExperimentConfig};
use gnn_audit::graph::SyntheticParams;
use gnn_audit::models::{Arch, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n·m) pairwise AUC with ties counted as one half, in exact halves.
pub fn brute_auc(members: &[f64], non_members: &[f64]) -> f64 {
    let mut halves = 0u64;
    for &a in members {
        for &b in non_members {
            if a > b {
                halves += 2;
            } else if a == b {
                halves += 1;
            }
        }
    }
    halves as f64 / (2 * members.len() * non_members.len()) as f64
}

/// Scores on a coarse grid so ties are common.
pub fn random_scores(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(0..40) as f64 / 40.0)
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A few-second experiment: small graph, short training.
pub fn small_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        master_seed: seed,
        target_dataset: DatasetSource::Synthetic(SyntheticParams {
            n: 400,
            dim: 32,
            intra_p: 0.03,
            inter_p: 0.002,
            ..SyntheticParams::default()
        }),
        target_model: ModelConfig {
            epochs: 40,
            hidden: 16,
            ..ModelConfig::new(Arch::Sage)
        },
        attack_training: AttackTrainConfig {
            epochs: 60,
            ..AttackTrainConfig::default()
        },
        ..ExperimentConfig::default()
    }
}
