mod common;

use proptest::prelude::*;
use svcfail_core::eval::stratified_folds;
use svcfail_core::forest::{best_split, Criterion, ForestConfig, MaxFeatures, RandomForest};
use svcfail_core::resample::{random_undersample, smote, smote_samples};
use svcfail_core::rules::{filter_rules, frequent_itemsets, score, AssociationRule, FilterParams, Item, ParentScope, Sign, Token};
use svcfail_core::schema::FailureType;
use svcfail_core::{BinaryData, Matrix};

use common::{brute_force_itemsets, exhaustive_split, on_segment};

fn binary_data(max_rows: usize, width: usize) -> impl Strategy<Value = BinaryData> {
    (4..max_rows).prop_flat_map(move |n| {
        (
            proptest::collection::vec(proptest::collection::vec(-50i32..50, width), n),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_filter("both classes with two rows each", |(_, y)| {
                y.iter().filter(|&&b| b).count() >= 2 && y.iter().filter(|&&b| !b).count() >= 2
            })
            .prop_map(move |(rows, y)| {
                let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(|v| v as f64 / 4.0).collect()).collect();
                BinaryData::new(Matrix::from_rows(width, &rows).unwrap(), y).unwrap()
            })
    })
}

fn rule(items: Vec<(u16, i64)>, ir: f64, up: bool) -> AssociationRule {
    let mut antecedent: Vec<Item> = items.into_iter().map(|(f, v)| Item { feature: f, token: Token::Value(v) }).collect();
    antecedent.sort();
    let phi = if up { ir } else { 1.0 / ir };
    AssociationRule {
        antecedent,
        consequent: FailureType::Sr,
        sup_f: 1,
        sup_c: 1,
        n_f: 1,
        n_c: 1,
        phi,
        ir,
        confidence: 0.0,
        sign: if up { Sign::Increases } else { Sign::Decreases },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fpgrowth_matches_brute_force(
        tx in proptest::collection::vec(proptest::collection::vec(0u32..12, 0..8), 1..120),
        frac in 0.01f64..0.6,
    ) {
        let min = ((tx.len() as f64 * frac).ceil() as usize).max(1);
        prop_assert_eq!(frequent_itemsets(&tx, min, 2), brute_force_itemsets(&tx, min, 2));
    }

    #[test]
    fn best_split_matches_exhaustive(data in binary_data(60, 3), leaf in 1usize..4, entropy in any::<bool>()) {
        let criterion = if entropy { Criterion::Entropy } else { Criterion::Gini };
        let rows: Vec<usize> = (0..data.len()).collect();
        let got = best_split(&data.x, &data.y, &rows, &[0, 1, 2], criterion, leaf);
        let want = exhaustive_split(&data.x, &data.y, &rows, &[0, 1, 2], criterion, leaf);
        match (got, want) {
            (None, None) => {}
            (Some(s), Some((f, t, g))) => {
                prop_assert_eq!((s.feature, s.threshold), (f, t));
                prop_assert!((s.gain - g).abs() < 1e-9);
            }
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn smote_rows_on_segments(data in binary_data(40, 2), k in 1usize..4, seed in any::<u64>()) {
        let samples = smote_samples(&data, k, 50, seed).unwrap();
        for s in &samples {
            prop_assert!(on_segment(data.x.row(s.base), data.x.row(s.neighbor), &s.row));
            prop_assert!((0.0..1.0).contains(&s.gap));
            prop_assert_eq!(data.y[s.base], data.y[s.neighbor]);
        }
        let out = smote(&data, k, None, seed).unwrap();
        prop_assert!(out.n_positive().abs_diff(out.n_negative()) <= 1);
        prop_assert_eq!(&out.x.as_slice()[..data.x.as_slice().len()], data.x.as_slice());
    }

    #[test]
    fn undersampling_balances_and_keeps_minority(data in binary_data(60, 2), seed in any::<u64>()) {
        let out = random_undersample(&data, seed).unwrap();
        prop_assert_eq!(out.n_positive(), out.n_negative());
        let minority = data.minority_label();
        for i in (0..data.len()).filter(|&i| data.y[i] == minority) {
            prop_assert!(out.origin.contains(&Some(i)));
        }
    }

    #[test]
    fn importances_normalized(data in binary_data(80, 3), seed in any::<u64>()) {
        let cfg = ForestConfig { n_estimators: 5, max_depth: 3, min_samples_split: 2, min_samples_leaf: 1, seed, ..Default::default() };
        let f = RandomForest::fit(&data, &cfg).unwrap();
        let sum: f64 = f.importances.iter().sum();
        prop_assert!(f.importances.iter().all(|&v| v >= 0.0));
        prop_assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-9);
        let ranks: Vec<usize> = f.ranked_importances().iter().map(|r| r.2).collect();
        prop_assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn forest_prefix_and_depth(data in binary_data(60, 2), seed in any::<u64>()) {
        let cfg = ForestConfig { n_estimators: 6, max_features: MaxFeatures::All, seed, ..Default::default() };
        let big = RandomForest::fit(&data, &cfg).unwrap();
        let small = RandomForest::fit(&data, &ForestConfig { n_estimators: 2, ..cfg.clone() }).unwrap();
        prop_assert_eq!(&big.trees[..2], &small.trees[..]);
        prop_assert!(big.trees.iter().all(|t| t.depth() <= cfg.max_depth));
    }

    #[test]
    fn score_identities(n_c in 1usize..100_000, a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let n_f = 1 + (a * (n_c - 1) as f64) as usize;
        let sup_f = 1 + (b * (n_f - 1) as f64) as usize;
        let sup_c = sup_f + (c * (n_c - n_f) as f64) as usize;
        let r = score(vec![], FailureType::Cc, sup_f, sup_c, n_f, n_c).unwrap();
        let prior = n_f as f64 / n_c as f64;
        prop_assert!(r.ir >= 1.0);
        prop_assert!((r.confidence - r.phi * prior).abs() <= 4.0 * f64::EPSILON * r.confidence);
        let rebuilt = if r.phi >= 1.0 { r.ir * prior } else { prior / r.ir };
        prop_assert!((rebuilt - r.confidence).abs() <= 1e-12 * r.confidence.max(1e-300));
        prop_assert_eq!(r.sign == Sign::Increases, r.phi >= 1.0);
    }

    #[test]
    fn filter_keeps_only_supported_children(
        singles in proptest::collection::vec((1.0f64..4.0, any::<bool>()), 6),
        pairs in proptest::collection::vec((0u16..6, 1u16..6, 1.0f64..5.0, any::<bool>()), 0..15),
        min_ir in 1.0f64..2.5,
        delta_ir in 0.0f64..1.0,
    ) {
        let mut rules: Vec<AssociationRule> =
            singles.iter().enumerate().map(|(f, &(ir, up))| rule(vec![(f as u16, 1)], ir, up)).collect();
        for (a, off, ir, up) in pairs {
            let b = (a + off) % 6;
            let r = rule(vec![(a, 1), (b, 1)], ir, up);
            if !rules.iter().any(|x| x.antecedent == r.antecedent) {
                rules.push(r);
            }
        }
        let params = FilterParams { min_ir, delta_ir, parent_scope: ParentScope::Selected };
        let sel = filter_rules(&rules, &params);
        prop_assert!(sel.unplaced.is_empty());
        for g in &sel.groups {
            prop_assert!(g.parent.ir >= min_ir && g.parent.size() == 1);
            for c in &g.children {
                prop_assert!(c.ir >= min_ir);
                prop_assert!(c.antecedent.contains(&g.parent.antecedent[0]));
                prop_assert!(c.ir - g.parent.ir >= delta_ir);
            }
            prop_assert!(g.children.windows(2).all(|w| w[0].ir >= w[1].ir));
        }
        prop_assert!(sel.groups.windows(2).all(|w| w[0].parent.ir >= w[1].parent.ir));
        // every size-2 rule that qualifies is shown exactly once
        let shown: Vec<&AssociationRule> = sel.rules().collect();
        for r in rules.iter().filter(|r| r.size() == 2 && r.ir >= min_ir) {
            let qualifies = sel.groups.iter().any(|g| {
                r.antecedent.contains(&g.parent.antecedent[0]) && r.ir - g.parent.ir >= delta_ir
            });
            prop_assert_eq!(shown.iter().filter(|s| s.antecedent == r.antecedent).count(), qualifies as usize);
        }
    }

    #[test]
    fn folds_partition_with_balanced_classes(
        labels in proptest::collection::vec(any::<bool>(), 10..300),
        k in 2usize..6,
        salt in any::<u64>(),
    ) {
        let pos = labels.iter().filter(|&&b| b).count();
        prop_assume!(pos >= k && labels.len() - pos >= k);
        let keys: Vec<u64> = (0..labels.len() as u64).map(|i| svcfail_core::seed::mix64(i ^ salt)).collect();
        let folds = stratified_folds(&labels, &keys, k).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let p: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i]).count()).collect();
        let n: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| !labels[i]).count()).collect();
        prop_assert!(p.iter().max().unwrap() - p.iter().min().unwrap() <= 1);
        prop_assert!(n.iter().max().unwrap() - n.iter().min().unwrap() <= 1);
    }
}
