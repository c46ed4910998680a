//! Shadow-model attack features, the three attack classifiers and their
//! evaluation against a target model.

mod features;
mod model;

pub use features::{
    build_attack_training_set, build_examples, query_features, top2, AttackExample, AttackFeature,
    AttackKind, FeatureEncoding, Membership,
};
pub use model::{
    evaluate_attack, infer_membership, train_attack, train_attack_with, AttackEvaluation,
    AttackModel, AttackTrainConfig,
};
