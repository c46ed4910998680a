mod common;

use common::{brute_auc, random_scores, rng};
use gnn_audit::analysis::{
    auc, fixed_bin_groups, group_table, percentile_groups, GroupingKind, GROUP_COUNT,
};
use gnn_audit::attack::AttackKind;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn auc_matches_pairwise_count_on_large_sets() {
    let mut r = rng(5);
    let a = random_scores(&mut r, 137);
    let b = random_scores(&mut r, 61);
    assert_eq!(auc(&a, &b).unwrap(), brute_auc(&a, &b));
    assert_eq!(auc(&a, &b).unwrap() + auc(&b, &a).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn auc_equals_brute_force(
        a in prop::collection::vec(0u8..20, 1..80),
        b in prop::collection::vec(0u8..20, 1..80),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        prop_assert_eq!(auc(&a, &b).unwrap(), brute_auc(&a, &b));
        prop_assert_eq!(auc(&a, &b).unwrap() + auc(&b, &a).unwrap(), 1.0);
    }

    #[test]
    fn auc_is_invariant_to_monotone_transforms(
        a in prop::collection::vec(-5.0f64..5.0, 1..50),
        b in prop::collection::vec(-5.0f64..5.0, 1..50),
    ) {
        let f = |xs: &[f64]| xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect::<Vec<_>>();
        prop_assert_eq!(auc(&a, &b).unwrap(), auc(&f(&a), &f(&b)).unwrap());
    }

    #[test]
    fn fixed_bins_follow_quarter_boundaries(x in prop::collection::vec(-1.0f64..=1.0, 1..100)) {
        let g = fixed_bin_groups(&x).unwrap();
        for (&v, &grp) in x.iter().zip(&g.groups) {
            let want = if v < 0.25 { 0 } else if v < 0.5 { 1 } else if v < 0.75 { 2 } else { 3 };
            prop_assert_eq!(grp, want);
        }
    }
}

/// Smallest value whose cumulative count reaches `pct` percent.
fn oracle_cut(values: &[f64], pct: usize) -> f64 {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    for &x in &distinct {
        let at_most = values.iter().filter(|&&v| v <= x).count();
        if 100 * at_most >= pct * values.len() {
            return x;
        }
    }
    unreachable!()
}

#[test]
fn degree_quartiles_match_cumulative_count_oracle() {
    let mut r = rng(9);
    let degrees: Vec<f64> = (0..1000).map(|_| r.random_range(0..15) as f64).collect();
    let g = percentile_groups(&degrees).unwrap();
    let cuts = [25, 50, 75].map(|p| oracle_cut(&degrees, p));
    for (&d, &grp) in degrees.iter().zip(&g.groups) {
        let want = if d <= cuts[0] {
            0
        } else if d <= cuts[1] {
            1
        } else if d <= cuts[2] {
            2
        } else {
            3
        };
        assert_eq!(grp, want, "degree {d}");
    }
    assert_eq!(g.sizes().iter().sum::<usize>(), 1000);
    assert!(percentile_groups(&[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn fixed_bins_reject_out_of_range() {
    assert!(fixed_bin_groups(&[1.5]).is_err());
    assert!(fixed_bin_groups(&[f64::NAN]).is_err());
    assert_eq!(fixed_bin_groups(&[1.0]).unwrap().groups, vec![3]);
}

#[test]
fn group_table_auc_matches_per_group_oracle() {
    let mut r = rng(2);
    let n = 300;
    let values: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
    let scores = random_scores(&mut r, n);
    let member: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
    let t = group_table(
        AttackKind::TwoHop,
        GroupingKind::EgoDensityBins,
        &values,
        &scores,
        &member,
    )
    .unwrap();
    assert_eq!(t.rows.len(), GROUP_COUNT);
    assert_eq!(t.rows.iter().map(|r| r.nodes).sum::<usize>(), n);
    for row in &t.rows {
        let in_group = |i: &usize| ((values[*i] * 4.0).floor() as usize).min(3) == row.group;
        let pos: Vec<f64> = (0..n)
            .filter(in_group)
            .filter(|&i| member[i])
            .map(|i| scores[i])
            .collect();
        let neg: Vec<f64> = (0..n)
            .filter(in_group)
            .filter(|&i| !member[i])
            .map(|i| scores[i])
            .collect();
        assert_eq!(row.members, pos.len());
        assert_eq!(row.auc, Some(brute_auc(&pos, &neg)));
    }
    // A group without non-members has no AUC.
    let t = group_table(
        AttackKind::TwoHop,
        GroupingKind::EgoDensityBins,
        &[0.1, 0.9],
        &[0.3, 0.4],
        &[true, false],
    )
    .unwrap();
    assert_eq!(t.auc_of(0), None);
    assert_eq!(t.extreme_aucs(), None);
}
