use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::models::{predict_nodes, GnnModel, Posteriors, QueryMode};

/// The two largest posterior values, in descending order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackFeature {
    pub p1: f64,
    pub p2: f64,
}

impl AttackFeature {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.p1, self.p2]
    }
}

/// Largest two entries of `p`; equal values are taken lowest class first.
pub fn top2(p: &Posteriors) -> Result<AttackFeature> {
    let v = p.as_slice();
    if v.len() < 2 {
        return Err(Error::invalid("top2 needs at least two classes"));
    }
    let (mut i1, mut i2) = if v[1] > v[0] { (1, 0) } else { (0, 1) };
    for (i, &x) in v.iter().enumerate().skip(2) {
        if x > v[i1] {
            i2 = i1;
            i1 = i;
        } else if x > v[i2] {
            i2 = i;
        }
    }
    Ok(AttackFeature {
        p1: v[i1],
        p2: v[i2],
    })
}

/// Which query results an attack consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    ZeroHop,
    TwoHop,
    Combined,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [
        AttackKind::ZeroHop,
        AttackKind::TwoHop,
        AttackKind::Combined,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::ZeroHop => "zero_hop",
            AttackKind::TwoHop => "two_hop",
            AttackKind::Combined => "combined",
        }
    }

    pub fn uses_zero_hop(self) -> bool {
        self != AttackKind::TwoHop
    }

    pub fn uses_two_hop(self) -> bool {
        self != AttackKind::ZeroHop
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero_hop" | "0hop" | "0-hop" => Ok(AttackKind::ZeroHop),
            "two_hop" | "2hop" | "2-hop" => Ok(AttackKind::TwoHop),
            "combined" => Ok(AttackKind::Combined),
            _ => Err(Error::invalid(format!("unknown attack kind `{s}`"))),
        }
    }
}

/// How a posterior vector is turned into attack-model input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// Ranked top-2 posterior values (width 2).
    Top2,
    /// One-hot of the predicted label (width = class count).
    LabelOnly,
}

impl FeatureEncoding {
    pub fn name(self) -> &'static str {
        match self {
            FeatureEncoding::Top2 => "top2",
            FeatureEncoding::LabelOnly => "label_only",
        }
    }

    pub fn width(self, class_count: usize) -> usize {
        match self {
            FeatureEncoding::Top2 => 2,
            FeatureEncoding::LabelOnly => class_count,
        }
    }

    pub fn encode(self, p: &Posteriors) -> Result<Vec<f64>> {
        match self {
            FeatureEncoding::Top2 => Ok(top2(p)?.to_vec()),
            FeatureEncoding::LabelOnly => Ok(crate::defense::label_only_posterior(p)),
        }
    }
}

impl fmt::Display for FeatureEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ground truth (or prediction) about training-set membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    NonMember,
    Member,
}

impl Membership {
    pub fn is_member(self) -> bool {
        self == Membership::Member
    }

    pub(crate) fn class_index(self) -> usize {
        match self {
            Membership::NonMember => 0,
            Membership::Member => 1,
        }
    }
}

/// One attack-model input with its membership label. `feature0` comes from
/// the 0-hop query, `feature2` from the 2-hop query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackExample {
    pub feature0: Option<Vec<f64>>,
    pub feature2: Option<Vec<f64>>,
    pub label: Membership,
}

impl AttackExample {
    pub fn has_fields_for(&self, kind: AttackKind) -> bool {
        (!kind.uses_zero_hop() || self.feature0.is_some())
            && (!kind.uses_two_hop() || self.feature2.is_some())
    }
}

/// Attack inputs for `nodes` of `partition`, queried on `model`. Each node is
/// queried inside its own partition graph.
pub fn query_features(
    model: &GnnModel,
    partition: &GraphDataset,
    nodes: &[usize],
    kind: AttackKind,
    encoding: FeatureEncoding,
) -> Result<Vec<(Option<Vec<f64>>, Option<Vec<f64>>)>> {
    let encode_all = |mode: QueryMode| -> Result<Vec<Vec<f64>>> {
        predict_nodes(model, partition, nodes, mode)?
            .iter()
            .map(|p| encoding.encode(p))
            .collect()
    };
    let zero = if kind.uses_zero_hop() {
        Some(encode_all(QueryMode::ZeroHop)?)
    } else {
        None
    };
    let two = if kind.uses_two_hop() {
        Some(encode_all(QueryMode::TwoHop)?)
    } else {
        None
    };
    Ok((0..nodes.len())
        .map(|i| {
            (
                zero.as_ref().map(|z| z[i].clone()),
                two.as_ref().map(|t| t[i].clone()),
            )
        })
        .collect())
}

fn labelled(
    model: &GnnModel,
    ds: &GraphDataset,
    kind: AttackKind,
    encoding: FeatureEncoding,
    label: Membership,
) -> Result<Vec<AttackExample>> {
    let nodes: Vec<usize> = (0..ds.node_count()).collect();
    Ok(query_features(model, ds, &nodes, kind, encoding)?
        .into_iter()
        .map(|(feature0, feature2)| AttackExample {
            feature0,
            feature2,
            label,
        })
        .collect())
}

/// Attack training data from a shadow model: every node of `shadow_train`
/// is a member, every node of `shadow_test` a non-member.
pub fn build_attack_training_set(
    shadow_model: &GnnModel,
    shadow_train: &GraphDataset,
    shadow_test: &GraphDataset,
    kind: AttackKind,
) -> Result<Vec<AttackExample>> {
    build_examples(
        shadow_model,
        shadow_train,
        shadow_test,
        kind,
        FeatureEncoding::Top2,
    )
}

/// [`build_attack_training_set`] with an explicit input encoding.
pub fn build_examples(
    model: &GnnModel,
    members: &GraphDataset,
    non_members: &GraphDataset,
    kind: AttackKind,
    encoding: FeatureEncoding,
) -> Result<Vec<AttackExample>> {
    for ds in [members, non_members] {
        if ds.feature_dim() != model.in_dim() {
            return Err(Error::shape(format!(
                "partition feature dim {} but model expects {}",
                ds.feature_dim(),
                model.in_dim()
            )));
        }
    }
    let mut out = labelled(model, members, kind, encoding, Membership::Member)?;
    out.extend(labelled(
        model,
        non_members,
        kind,
        encoding,
        Membership::NonMember,
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn post(v: &[f64]) -> Posteriors {
        Posteriors::new(v.to_vec()).unwrap()
    }

    #[test]
    fn top2_cases() {
        assert_eq!(
            top2(&post(&[0.1, 0.7, 0.2])).unwrap(),
            AttackFeature { p1: 0.7, p2: 0.2 }
        );
        assert_eq!(
            top2(&post(&[0.25; 4])).unwrap(),
            AttackFeature { p1: 0.25, p2: 0.25 }
        );
        assert!(top2(&post(&[1.0])).is_err());
    }

    #[test]
    fn top2_matches_sort_oracle_and_ignores_class_order() {
        let mut rng = RngStream::new(5);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..70).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let mut sorted = p.clone();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let f = top2(&Posteriors::from_logits(
                &p.iter().map(|x| x.ln()).collect::<Vec<_>>(),
            ))
            .unwrap();
            assert!((f.p1 - sorted[0]).abs() < 1e-12 && (f.p2 - sorted[1]).abs() < 1e-12);

            let exact = top2(&Posteriors(p.clone())).unwrap();
            assert_eq!((exact.p1, exact.p2), (sorted[0], sorted[1]));
            let mut shuffled = p.clone();
            shuffled.shuffle(&mut rng);
            assert_eq!(top2(&Posteriors(shuffled)).unwrap(), exact);
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "combined".parse::<AttackKind>().unwrap(),
            AttackKind::Combined
        );
        assert!("1hop".parse::<AttackKind>().is_err());
    }
}
