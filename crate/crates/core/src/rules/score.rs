use serde::Serialize;

use super::items::Item;
use crate::error::{Error, Result};
use crate::schema::FailureType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    /// `phi >= 1`: the antecedent is over-represented among failures.
    Increases,
    Decreases,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Increases => "+",
            Sign::Decreases => "-",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            Sign::Increases => "red",
            Sign::Decreases => "green",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationRule {
    /// Sorted items.
    pub antecedent: Vec<Item>,
    pub consequent: FailureType,
    pub sup_f: usize,
    pub sup_c: usize,
    pub n_f: usize,
    pub n_c: usize,
    pub phi: f64,
    pub ir: f64,
    pub confidence: f64,
    pub sign: Sign,
}

impl AssociationRule {
    pub fn size(&self) -> usize {
        self.antecedent.len()
    }

    /// Base rate `|F| / |C|`.
    pub fn prior(&self) -> f64 {
        self.n_f as f64 / self.n_c as f64
    }
}

/// Scores `antecedent => consequent` from its supports in the failed set
/// (`sup_f` of `n_f`) and the corpus (`sup_c` of `n_c`).
pub fn score(
    antecedent: Vec<Item>,
    consequent: FailureType,
    sup_f: usize,
    sup_c: usize,
    n_f: usize,
    n_c: usize,
) -> Result<AssociationRule> {
    if sup_f == 0 || sup_c == 0 || n_f == 0 || n_c == 0 {
        return Err(Error::ZeroSupport);
    }
    if sup_c < sup_f || n_c < n_f || sup_f > n_f {
        return Err(Error::InvalidConfig(format!(
            "inconsistent supports: sup_F={sup_f} sup_C={sup_c} |F|={n_f} |C|={n_c}"
        )));
    }
    let phi = (sup_f as f64 / n_f as f64) * (n_c as f64 / sup_c as f64);
    Ok(AssociationRule {
        antecedent,
        consequent,
        sup_f,
        sup_c,
        n_f,
        n_c,
        phi,
        ir: phi.max(1.0 / phi),
        confidence: sup_f as f64 / sup_c as f64,
        sign: if phi >= 1.0 { Sign::Increases } else { Sign::Decreases },
    })
}
