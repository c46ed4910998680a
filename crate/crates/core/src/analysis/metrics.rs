use serde::{Deserialize, Serialize};

use crate::attack::Membership;
use crate::error::{Error, Result};

/// Twice the Mann-Whitney U statistic: each cross pair contributes 2 when the
/// member scores higher and 1 on a tie. Kept integral so ties stay exact.
fn doubled_u(members: &[f64], non_members: &[f64]) -> u128 {
    let mut sorted = non_members.to_vec();
    sorted.sort_by(f64::total_cmp);
    members
        .iter()
        .map(|&s| {
            let below = sorted.partition_point(|&x| x < s);
            let not_above = sorted.partition_point(|&x| x <= s);
            (2 * below + (not_above - below)) as u128
        })
        .sum()
}

/// Probability that a random member outscores a random non-member, ties
/// counting one half.
pub fn auc(member_scores: &[f64], nonmember_scores: &[f64]) -> Result<f64> {
    if member_scores.is_empty() || nonmember_scores.is_empty() {
        return Err(Error::invalid("auc needs at least one score on each side"));
    }
    if member_scores
        .iter()
        .chain(nonmember_scores)
        .any(|x| x.is_nan())
    {
        return Err(Error::NonFinite("NaN attack score".into()));
    }
    let pairs = 2 * member_scores.len() as u128 * nonmember_scores.len() as u128;
    Ok(doubled_u(member_scores, nonmember_scores) as f64 / pairs as f64)
}

/// `auc` that yields `None` instead of an error when a side is empty.
pub fn auc_if_defined(member_scores: &[f64], nonmember_scores: &[f64]) -> Option<f64> {
    if member_scores.is_empty() || nonmember_scores.is_empty() {
        None
    } else {
        auc(member_scores, nonmember_scores).ok()
    }
}

/// Member-as-positive confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Each count divided by the total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRatios {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn ratios(&self) -> ConfusionRatios {
        let t = self.total() as f64;
        ConfusionRatios {
            tp: self.tp as f64 / t,
            fp: self.fp as f64 / t,
            tn: self.tn as f64 / t,
            fn_: self.fn_ as f64 / t,
        }
    }
}

pub fn confusion(predictions: &[Membership], truths: &[Membership]) -> Result<ConfusionCounts> {
    if predictions.len() != truths.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predictions.iter().zip(truths) {
        match (p.is_member(), t.is_member()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}
