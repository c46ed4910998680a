use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::auc_if_defined;
use crate::attack::{AttackEvaluation, AttackKind};
use crate::error::{Error, Result};
use crate::graph::{node_metric, GraphDataset, NodeMetric};

/// How nodes are split into four groups for per-group AUC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingKind {
    /// Quartiles of node degree over the evaluated population.
    DegreePercentile,
    /// Fixed bins of width 0.25 over ego density.
    EgoDensityBins,
    /// Fixed bins of width 0.25 over 2-hop feature similarity.
    FeatureSimilarityBins,
}

impl GroupingKind {
    pub const ALL: [GroupingKind; 3] = [
        GroupingKind::DegreePercentile,
        GroupingKind::EgoDensityBins,
        GroupingKind::FeatureSimilarityBins,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupingKind::DegreePercentile => "degree_percentile",
            GroupingKind::EgoDensityBins => "ego_density_bins",
            GroupingKind::FeatureSimilarityBins => "feature_similarity_bins",
        }
    }

    pub fn metric(self) -> NodeMetric {
        match self {
            GroupingKind::DegreePercentile => NodeMetric::Degree,
            GroupingKind::EgoDensityBins => NodeMetric::EgoDensity,
            GroupingKind::FeatureSimilarityBins => NodeMetric::FeatureSimilarity,
        }
    }
}

impl fmt::Display for GroupingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown grouping `{s}`")))
    }
}

pub const GROUP_COUNT: usize = 4;

/// Group index per value plus the value range each group covers.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupAssignment {
    pub groups: Vec<usize>,
    /// `(lower, upper)` per group. Percentile groups are `(prev_cut, cut]`
    /// with the first group closed below at the minimum value.
    pub bounds: Vec<(f64, f64)>,
}

impl GroupAssignment {
    pub fn sizes(&self) -> [usize; GROUP_COUNT] {
        let mut s = [0; GROUP_COUNT];
        for &g in &self.groups {
            s[g] += 1;
        }
        s
    }
}

/// Nearest-rank percentile of already sorted values.
fn nearest_rank(sorted: &[f64], pct: usize) -> f64 {
    let rank = (pct * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Degree-style quartile groups: a value equal to a cut point goes to the
/// lower group.
pub fn percentile_groups(values: &[f64]) -> Result<GroupAssignment> {
    if values.len() < GROUP_COUNT {
        return Err(Error::invalid(format!(
            "percentile grouping needs at least {GROUP_COUNT} nodes, got {}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cuts = [25, 50, 75].map(|p| nearest_rank(&sorted, p));
    let groups = values
        .iter()
        .map(|&x| cuts.iter().take_while(|&&c| x > c).count())
        .collect();
    let bounds = vec![
        (sorted[0], cuts[0]),
        (cuts[0], cuts[1]),
        (cuts[1], cuts[2]),
        (cuts[2], sorted[sorted.len() - 1]),
    ];
    Ok(GroupAssignment { groups, bounds })
}

/// Fixed bins `[0,.25) [.25,.5) [.5,.75) [.75,1]`. Values below 0 (possible
/// for cosine similarity) fall in the first bin.
pub fn fixed_bin_groups(values: &[f64]) -> Result<GroupAssignment> {
    let mut groups = Vec::with_capacity(values.len());
    for &x in values {
        if x.is_nan() || x > 1.0 + 1e-12 {
            return Err(Error::invalid(format!("bin value {x} outside [0,1]")));
        }
        groups.push(((x.max(0.0) * 4.0).floor() as usize).min(GROUP_COUNT - 1));
    }
    let bounds = (0..GROUP_COUNT)
        .map(|i| (i as f64 * 0.25, (i + 1) as f64 * 0.25))
        .collect();
    Ok(GroupAssignment { groups, bounds })
}

pub fn group_nodes(values: &[f64], kind: GroupingKind) -> Result<GroupAssignment> {
    match kind {
        GroupingKind::DegreePercentile => percentile_groups(values),
        _ => fixed_bin_groups(values),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: usize,
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
    pub members: usize,
    /// Absent when the group lacks members or non-members.
    pub auc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    pub attack: AttackKind,
    pub grouping: GroupingKind,
    pub rows: Vec<GroupRow>,
}

impl GroupTable {
    pub fn auc_of(&self, group: usize) -> Option<f64> {
        self.rows.get(group).and_then(|r| r.auc)
    }

    /// AUC of the lowest and highest groups that have one.
    pub fn extreme_aucs(&self) -> Option<(f64, f64)> {
        let mut defined = self.rows.iter().filter_map(|r| r.auc);
        let first = defined.next()?;
        Some((first, defined.last().unwrap_or(first)))
    }
}

/// Builds a table from per-node values and attack scores. `is_member[i]`
/// says whether node `i` of the population is a member.
pub fn group_table(
    attack: AttackKind,
    grouping: GroupingKind,
    values: &[f64],
    scores: &[f64],
    is_member: &[bool],
) -> Result<GroupTable> {
    if values.len() != scores.len() || values.len() != is_member.len() {
        return Err(Error::shape(
            "group_table: values, scores and labels differ in length",
        ));
    }
    let assignment = group_nodes(values, grouping)?;
    let rows = (0..GROUP_COUNT)
        .map(|g| {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for i in (0..values.len()).filter(|&i| assignment.groups[i] == g) {
                if is_member[i] {
                    pos.push(scores[i]);
                } else {
                    neg.push(scores[i]);
                }
            }
            let (lower, upper) = assignment.bounds[g];
            GroupRow {
                group: g,
                lower,
                upper,
                nodes: pos.len() + neg.len(),
                members: pos.len(),
                auc: auc_if_defined(&pos, &neg),
            }
        })
        .collect();
    Ok(GroupTable {
        attack,
        grouping,
        rows,
    })
}

/// Node property of every node in `partition` (computed within that
/// partition's graph).
pub fn partition_metric(partition: &GraphDataset, metric: NodeMetric) -> Result<Vec<f64>> {
    (0..partition.node_count())
        .map(|v| node_metric(partition, v, metric))
        .collect()
}

/// Per-group AUC of an evaluated attack over the union of target members
/// and non-members.
pub fn grouped_auc(
    attack: AttackKind,
    evaluation: &AttackEvaluation,
    target_train: &GraphDataset,
    target_test: &GraphDataset,
    grouping: GroupingKind,
) -> Result<GroupTable> {
    if evaluation.member_scores.len() != target_train.node_count()
        || evaluation.nonmember_scores.len() != target_test.node_count()
    {
        return Err(Error::shape("grouped_auc: scores do not match partitions"));
    }
    let mut values = partition_metric(target_train, grouping.metric())?;
    values.extend(partition_metric(target_test, grouping.metric())?);
    let scores: Vec<f64> = evaluation
        .member_scores
        .iter()
        .chain(&evaluation.nonmember_scores)
        .copied()
        .collect();
    let is_member: Vec<bool> = (0..scores.len())
        .map(|i| i < target_train.node_count())
        .collect();
    group_table(attack, grouping, &values, &scores, &is_member)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::auc;

    #[test]
    fn four_degrees_one_per_group() {
        let a = percentile_groups(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.groups, vec![0, 1, 2, 3]);
        assert!(percentile_groups(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn bin_boundaries() {
        let a = fixed_bin_groups(&[0.0, 0.2499, 0.25, 0.5, 0.75, 1.0, -0.3]).unwrap();
        assert_eq!(a.groups, vec![0, 0, 1, 2, 3, 3, 0]);
        assert!(fixed_bin_groups(&[1.5]).is_err());
    }

    #[test]
    fn ties_at_cut_go_low() {
        let a = percentile_groups(&[2.0, 2.0, 2.0, 2.0, 5.0]).unwrap();
        assert_eq!(a.sizes(), [4, 0, 0, 1]);
    }

    #[test]
    fn member_only_group_has_no_auc() {
        let t = group_table(
            AttackKind::ZeroHop,
            GroupingKind::EgoDensityBins,
            &[0.1, 0.1, 0.9, 0.9],
            &[0.8, 0.7, 0.6, 0.1],
            &[true, true, true, false],
        )
        .unwrap();
        assert_eq!(t.rows[0].auc, None);
        assert_eq!(t.rows[3].auc, Some(1.0));
        assert_eq!(t.rows[1].nodes, 0);
    }

    #[test]
    fn single_bin_reproduces_global_auc() {
        let scores = [0.9, 0.4, 0.6, 0.3, 0.5, 0.55];
        let member = [true, false, true, false, true, false];
        let t = group_table(
            AttackKind::TwoHop,
            GroupingKind::FeatureSimilarityBins,
            &[0.8; 6],
            &scores,
            &member,
        )
        .unwrap();
        let global = auc(&[0.9, 0.6, 0.5], &[0.4, 0.3, 0.55]).unwrap();
        assert_eq!(t.rows[3].auc, Some(global));
        assert_eq!(t.rows[3].nodes, 6);
    }
}
