use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Dataset, FeatureKind};

/// Linear-interpolation quantile of sorted data (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureBins {
    /// `[min, q0.1, ..., q0.9, max]` with duplicates merged.
    Edges(Vec<f64>),
    Categorical,
}

/// Per-feature decile bins fit on the whole corpus. Bin `d` (1-based) is
/// `(e[d-1], e[d]]`; the first bin also includes `e[0]`. Values outside the
/// fitted range go to the nearest end bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileBinner {
    pub bins: Vec<FeatureBins>,
}

impl DecileBinner {
    pub fn fit(dataset: &Dataset) -> Result<DecileBinner> {
        if dataset.len() == 0 {
            return Err(Error::EmptyClass("cannot fit deciles on an empty corpus".into()));
        }
        let bins = dataset
            .schema
            .specs()
            .iter()
            .enumerate()
            .map(|(j, spec)| match spec.kind {
                FeatureKind::Categorical => FeatureBins::Categorical,
                FeatureKind::Numerical => FeatureBins::Edges(decile_edges(dataset.x.column(j))),
            })
            .collect();
        Ok(DecileBinner { bins })
    }

    pub fn edges(&self, feature: usize) -> Option<&[f64]> {
        match &self.bins[feature] {
            FeatureBins::Edges(e) => Some(e),
            FeatureBins::Categorical => None,
        }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges(feature).map_or(0, |e| (e.len() - 1).max(1))
    }

    /// 1-based decile index of `value`; panics on a categorical feature.
    pub fn bin(&self, feature: usize, value: f64) -> usize {
        let e = self.edges(feature).expect("numerical feature");
        if e.len() == 1 {
            return 1;
        }
        let k = e[1..].partition_point(|&b| b < value);
        (k + 1).min(e.len() - 1)
    }

    /// Interval label such as `(120.0, 180.0]`.
    pub fn label(&self, feature: usize, decile: usize) -> Option<String> {
        let e = self.edges(feature)?;
        if decile == 0 || decile > self.n_bins(feature) {
            return None;
        }
        if e.len() == 1 {
            return Some(format!("[{}, {}]", edge(e[0]), edge(e[0])));
        }
        let open = if decile == 1 { '[' } else { '(' };
        Some(format!("{open}{}, {}]", edge(e[decile - 1]), edge(e[decile])))
    }
}

/// Edge for display, rounded to 4 decimals.
fn edge(v: f64) -> String {
    format!("{:?}", (v * 1e4).round() / 1e4)
}

fn decile_edges(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut edges = Vec::with_capacity(11);
    for k in 0..=10 {
        let q = quantile(&values, k as f64 / 10.0);
        if edges.last().map_or(true, |&last| q > last) {
            edges.push(q);
        }
    }
    edges
}
