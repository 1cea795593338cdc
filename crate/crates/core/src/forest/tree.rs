use rand::seq::index;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{Criterion, ForestConfig};
use crate::data::Matrix;
use crate::seed;

/// Gains closer than this are treated as equal; the earlier
/// `(feature, threshold)` wins.
pub const GAIN_EPS: f64 = 1e-12;

/// Node impurity of class counts. Zero counts contribute nothing.
pub fn impurity(counts: &[usize], criterion: Criterion) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    match criterion {
        Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>(),
        Criterion::Entropy => -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.log2()
            })
            .sum::<f64>(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent impurity minus the size-weighted child impurities.
    pub gain: f64,
}

/// Threshold between two consecutive distinct sorted values.
#[inline]
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = (a + b) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Best impurity-decreasing split of `rows` (duplicates allowed) over the
/// candidate features. Thresholds are midpoints between consecutive
/// distinct values; rows with `value <= threshold` go left. Both children
/// must hold at least `min_samples_leaf` rows. Ties go to the lower feature
/// index, then the lower threshold.
pub fn best_split(
    x: &Matrix,
    y: &[bool],
    rows: &[usize],
    features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let n_pos = rows.iter().filter(|&&r| y[r]).count();
    let parent = impurity(&[n - n_pos, n_pos], criterion);
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();

    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(n);
    for &f in &feats {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let mut left_pos = 0usize;
        for i in 0..n - 1 {
            left_pos += pairs[i].1 as usize;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let right_pos = n_pos - left_pos;
            let child = (n_left as f64 * impurity(&[n_left - left_pos, left_pos], criterion)
                + n_right as f64 * impurity(&[n_right - right_pos, right_pos], criterion))
                / n as f64;
            let gain = parent - child;
            let better = match best {
                None => gain > GAIN_EPS,
                Some(b) => gain > b.gain + GAIN_EPS,
            };
            if better {
                best = Some(Split { feature: f, threshold: midpoint(pairs[i].0, pairs[i + 1].0), gain });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Training rows (with bootstrap multiplicity) reaching the node.
        n_samples: usize,
        /// Unweighted impurity decrease of the split.
        decrease: f64,
    },
    Leaf {
        /// `[negatives, positives]`.
        counts: [usize; 2],
    },
}

/// Binary decision tree stored in preorder; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [bool],
    config: &'a ForestConfig,
    n_draw: usize,
    nodes: Vec<Node>,
}

fn child_key(key: u64, side: u64) -> u64 {
    seed::mix64(key.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(side + 1))
}

impl Builder<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize, key: u64) -> usize {
        let n_pos = rows.iter().filter(|&&r| self.y[r]).count();
        let counts = [rows.len() - n_pos, n_pos];
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        if depth >= self.config.max_depth
            || rows.len() < self.config.min_samples_split
            || n_pos == 0
            || n_pos == rows.len()
        {
            return id;
        }
        let mut rng = seed::Rng::seed_from_u64(key);
        let p = self.x.n_cols();
        let features = index::sample(&mut rng, p, self.n_draw).into_vec();
        let Some(split) = best_split(
            self.x,
            self.y,
            &rows,
            &features,
            self.config.criterion,
            self.config.min_samples_leaf,
        ) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x.get(r, split.feature) <= split.threshold);
        let n_samples = rows.len();
        drop(rows);
        let left = self.build(left_rows, depth + 1, child_key(key, 0));
        let right = self.build(right_rows, depth + 1, child_key(key, 1));
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            n_samples,
            decrease: split.gain,
        };
        id
    }
}

impl Tree {
    /// Grow a tree on `rows` (a bootstrap sample, duplicates allowed).
    pub fn fit(x: &Matrix, y: &[bool], rows: Vec<usize>, config: &ForestConfig, key: u64) -> Tree {
        let n_draw = config.max_features.resolve(x.n_cols());
        let mut b = Builder { x, y, config, n_draw, nodes: Vec::new() };
        b.build(rows, 0, key);
        Tree { nodes: b.nodes }
    }

    pub fn leaf_for(&self, row: &[f64]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Positive-class fraction of the leaf reached by `row`.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let [neg, pos] = self.leaf_for(row);
        if neg + pos == 0 {
            0.0
        } else {
            pos as f64 / (neg + pos) as f64
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Per-feature sum of `(n_node / n_root) * decrease` over split nodes.
    pub fn importances(&self, n_features: usize) -> Vec<f64> {
        let mut imp = vec![0.0; n_features];
        let root = match &self.nodes[0] {
            Node::Split { n_samples, .. } => *n_samples as f64,
            Node::Leaf { .. } => return imp,
        };
        for node in &self.nodes {
            if let Node::Split { feature, n_samples, decrease, .. } = node {
                imp[*feature] += *n_samples as f64 / root * decrease;
            }
        }
        imp
    }
}
