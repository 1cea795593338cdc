//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use svcfail_core::forest::Criterion;
use svcfail_core::schema::FailureType;
use svcfail_core::synthgen::{Condition, GeneratorConfig, PlantedRule};
use svcfail_core::Matrix;

/// Every itemset of size 1 or 2 with its count, by direct enumeration.
/// Output sorted by size, then items, like `frequent_itemsets`.
pub fn brute_force_itemsets(transactions: &[Vec<u32>], min_count: usize, max_size: usize) -> Vec<(Vec<u32>, usize)> {
    let mut counts: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    for tx in transactions {
        let mut items = tx.clone();
        items.sort_unstable();
        items.dedup();
        for (a, &i) in items.iter().enumerate() {
            *counts.entry(vec![i]).or_default() += 1;
            if max_size >= 2 {
                for &j in &items[a + 1..] {
                    *counts.entry(vec![i, j]).or_default() += 1;
                }
            }
        }
    }
    let mut out: Vec<(Vec<u32>, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count.max(1)).collect();
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

fn node_impurity(pos: usize, n: usize, criterion: Criterion) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    let q = 1.0 - p;
    match criterion {
        Criterion::Gini => 2.0 * p * q,
        Criterion::Entropy => {
            let h = |v: f64| if v > 0.0 { -v * v.log2() } else { 0.0 };
            h(p) + h(q)
        }
    }
}

/// `(feature, threshold, gain)` of the best split by scanning every
/// feature and every midpoint between consecutive distinct values. Among
/// near-ties (within 1e-9 of the best gain) the first in
/// `(feature, threshold)` order wins. `None` when no split has positive
/// gain under the leaf-size constraint.
pub fn exhaustive_split(
    x: &Matrix,
    y: &[bool],
    rows: &[usize],
    features: &[usize],
    criterion: Criterion,
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = rows.len();
    let n_pos = rows.iter().filter(|&&r| y[r]).count();
    let parent = node_impurity(n_pos, n, criterion);
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();
    let mut all = Vec::new();
    for &f in &feats {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let mut t = (w[0] + w[1]) / 2.0;
            if t >= w[1] {
                t = w[0];
            }
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x.get(r, f) <= t).collect();
            let nl = left.len();
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let lp = left.iter().filter(|&&r| y[r]).count();
            let g = parent
                - (nl as f64 / n as f64) * node_impurity(lp, nl, criterion)
                - (nr as f64 / n as f64) * node_impurity(n_pos - lp, nr, criterion);
            if g > 1e-12 {
                all.push((f, t, g));
            }
        }
    }
    let best = all.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter().find(|s| s.2 >= best - 1e-9)
}

/// True when `row` lies on the segment from `a` to `b` in every coordinate.
pub fn on_segment(a: &[f64], b: &[f64], row: &[f64]) -> bool {
    a.iter().zip(b).zip(row).all(|((&a, &b), &v)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
        v >= lo - tol && v <= hi + tol
    })
}

/// Generator config with one planted rule.
pub fn planted(n_stops: usize, seed: u64, target: FailureType, when: Vec<Condition>, multiplier: f64) -> GeneratorConfig {
    GeneratorConfig {
        n_stops,
        seed,
        planted: vec![PlantedRule { when, target, multiplier }],
        ..Default::default()
    }
}
