//! Imbalance correction on binary-labeled training data: random
//! undersampling, NearMiss-3 and SMOTE.
//!
//! All distances are Euclidean on the encoded rows, categorical codes and
//! missing sentinels included, without scaling. Resamplers keep every
//! original minority row.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{sq_dist, BinaryData, Matrix};
use crate::error::{Error, Result};
use crate::par;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ResampleMethod {
    None,
    RandomUnder,
    #[serde(rename = "nearmiss3")]
    NearMiss3 {
        k: usize,
    },
    Smote {
        k: usize,
        /// Target minority/original-minority ratio; `None` balances the
        /// classes.
        ratio: Option<f64>,
    },
}

impl ResampleMethod {
    pub const NEARMISS3: ResampleMethod = ResampleMethod::NearMiss3 { k: 3 };
    pub const SMOTE: ResampleMethod = ResampleMethod::Smote { k: 2, ratio: None };

    /// The four strategies compared in the evaluation report.
    pub const ALL: [ResampleMethod; 4] =
        [ResampleMethod::None, ResampleMethod::SMOTE, ResampleMethod::NEARMISS3, ResampleMethod::RandomUnder];

    pub fn name(&self) -> &'static str {
        match self {
            ResampleMethod::None => "none",
            ResampleMethod::RandomUnder => "random-under",
            ResampleMethod::NearMiss3 { .. } => "nearmiss3",
            ResampleMethod::Smote { .. } => "smote",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ResampleMethod::NearMiss3 { k } | ResampleMethod::Smote { k, ratio: None } if k == 0 => {
                Err(Error::InvalidConfig("resampler k must be at least 1".into()))
            }
            ResampleMethod::Smote { k, ratio: Some(r) } if k == 0 || !(r > 0.0) => {
                Err(Error::InvalidConfig("SMOTE needs k >= 1 and ratio > 0".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, data: &BinaryData, seed: u64) -> Result<BinaryData> {
        self.validate()?;
        match *self {
            ResampleMethod::None => Ok(data.clone()),
            ResampleMethod::RandomUnder => random_undersample(data, seed),
            ResampleMethod::NearMiss3 { k } => nearmiss3(data, k),
            ResampleMethod::Smote { k, ratio } => smote(data, k, ratio, seed),
        }
    }
}

impl fmt::Display for ResampleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(ResampleMethod::None),
            "random-under" | "randomunder" | "random_under" | "rus" => Ok(ResampleMethod::RandomUnder),
            "nearmiss3" | "nearmiss" | "nearmiss-3" => Ok(ResampleMethod::NEARMISS3),
            "smote" => Ok(ResampleMethod::SMOTE),
            other => Err(Error::InvalidConfig(format!("unknown resampling method {other:?}"))),
        }
    }
}

fn split_classes(data: &BinaryData) -> (Vec<usize>, Vec<usize>, bool) {
    let minority_label = data.minority_label();
    let (mut minority, mut majority) = (Vec::new(), Vec::new());
    for (i, &y) in data.y.iter().enumerate() {
        if y == minority_label {
            minority.push(i);
        } else {
            majority.push(i);
        }
    }
    (minority, majority, minority_label)
}

/// Keep every minority row and a uniform sample without replacement of the
/// majority class down to the minority count. Row order is preserved.
pub fn random_undersample(data: &BinaryData, seed: u64) -> Result<BinaryData> {
    data.require_both_classes()?;
    let (minority, majority, _) = split_classes(data);
    let mut rng = seed::rng(seed, "random-under", &[]);
    let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|k| majority[k])
        .collect();
    keep.extend_from_slice(&minority);
    keep.sort_unstable();
    Ok(data.select(&keep))
}

/// Indices (into `pool`) of the `k` rows of `pool` closest to `query`,
/// nearest first, ties by position in `pool`. `skip` excludes one row.
fn k_nearest(x: &Matrix, query: &[f64], pool: &[usize], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = pool
        .iter()
        .enumerate()
        .filter(|&(_, &r)| Some(r) != skip)
        .map(|(pos, &r)| (sq_dist(query, x.row(r)), pos))
        .collect();
    let k = k.min(d.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() && k > 0 {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.truncate(k);
    d
}

/// NearMiss-3 undersampling.
///
/// Candidates are the union of each minority row's `k` nearest majority
/// rows. Among them, the ones with the largest mean distance to their `k`
/// nearest minority rows are kept, up to the minority count; ties go to the
/// lower row index.
pub fn nearmiss3(data: &BinaryData, k: usize) -> Result<BinaryData> {
    data.require_both_classes()?;
    if k == 0 {
        return Err(Error::InvalidConfig("NearMiss k must be at least 1".into()));
    }
    let (minority, majority, _) = split_classes(data);

    let near = par::map_slice(&minority, |&m| k_nearest(&data.x, data.x.row(m), &majority, k, None));
    let mut candidates: Vec<usize> = near.into_iter().flatten().map(|(_, pos)| majority[pos]).collect();
    candidates.sort_unstable();
    candidates.dedup();

    let scores = par::map_slice(&candidates, |&c| {
        let nn = k_nearest(&data.x, data.x.row(c), &minority, k, None);
        nn.iter().map(|(d2, _)| d2.sqrt()).sum::<f64>() / nn.len() as f64
    });
    let mut ranked: Vec<(f64, usize)> = scores.into_iter().zip(candidates).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.truncate(minority.len());

    let mut keep: Vec<usize> = ranked.into_iter().map(|(_, r)| r).collect();
    keep.extend_from_slice(&minority);
    keep.sort_unstable();
    Ok(data.select(&keep))
}

/// A SMOTE row and where it came from: `row = x[base] + gap * (x[neighbor] - x[base])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
    pub row: Vec<f64>,
}

/// Number of synthetic rows for a given ratio; `None` balances the classes.
pub fn smote_count(n_minority: usize, n_majority: usize, ratio: Option<f64>) -> usize {
    match ratio {
        None => n_majority.saturating_sub(n_minority),
        Some(r) => ((n_minority as f64 * r).round() as usize).saturating_sub(n_minority),
    }
}

/// Draw `count` SMOTE rows. Sample `j` uses the stream `(seed, j)`: a
/// uniform minority base row, one of its `k` nearest minority neighbors and
/// a uniform gap in `[0, 1)`.
pub fn smote_samples(data: &BinaryData, k: usize, count: usize, seed: u64) -> Result<Vec<SyntheticSample>> {
    let (minority, _, _) = split_classes(data);
    if minority.len() < 2 {
        return Err(Error::TooFewMinority(minority.len()));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("SMOTE k must be at least 1".into()));
    }
    let neighbors = par::map_slice(&minority, |&m| {
        k_nearest(&data.x, data.x.row(m), &minority, k, Some(m))
            .into_iter()
            .map(|(_, pos)| minority[pos])
            .collect::<Vec<_>>()
    });
    Ok(par::map_range(count, |j| {
        let mut rng = seed::rng(seed, "smote", &[j as u64]);
        let b = rng.gen_range(0..minority.len());
        let nn = neighbors[b][rng.gen_range(0..neighbors[b].len())];
        let gap: f64 = rng.gen();
        let (x, y) = (data.x.row(minority[b]), data.x.row(nn));
        let row = x.iter().zip(y).map(|(a, c)| a + gap * (c - a)).collect();
        SyntheticSample { base: minority[b], neighbor: nn, gap, row }
    }))
}

/// SMOTE oversampling: the input rows unchanged, followed by synthetic
/// minority rows on segments between minority neighbors.
pub fn smote(data: &BinaryData, k: usize, ratio: Option<f64>, seed: u64) -> Result<BinaryData> {
    let (minority, majority, label) = split_classes(data);
    if minority.len() < 2 {
        return Err(Error::TooFewMinority(minority.len()));
    }
    let count = smote_count(minority.len(), majority.len(), ratio);
    let samples = smote_samples(data, k, count, seed)?;
    let mut out = data.clone();
    for s in samples {
        out.x.push_row(&s.row)?;
        out.y.push(label);
        out.origin.push(None);
    }
    Ok(out)
}
