//! Random Forest classifier for one-vs-rest failure prediction.
//!
//! Trees are CART-style binary trees grown on bootstrap samples with a
//! fresh random feature subset at every node. Every random draw is keyed by
//! `(seed, tree index)` and the node's path from the root, so a forest is
//! identical whatever the thread schedule, the first `n` trees of a larger
//! forest form the `n`-tree forest, and a shallower tree is a prefix of a
//! deeper one.

mod ensemble;
mod grid;
mod io;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ensemble::RandomForest;
pub use grid::{grid_search, GridPoint, GridSearchResult, GridSearchSpace};
pub use io::{read_forest, write_forest};
pub use tree::{best_split, impurity, Node, Split, Tree, GAIN_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            other => Err(Error::InvalidConfig(format!("unknown split criterion {other:?}"))),
        }
    }
}

/// Number of features drawn at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `floor(sqrt(n_features))`, at least 1.
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub compute_oob: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            max_depth: 6,
            criterion: Criterion::Gini,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 10,
            min_samples_leaf: 5,
            compute_oob: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_estimators == 0 {
            return bad("n_estimators must be at least 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if let MaxFeatures::Fixed(0) = self.max_features {
            return bad("max_features must be at least 1");
        }
        Ok(())
    }
}
