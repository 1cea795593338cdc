use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::binning::DecileBinner;
use crate::error::{Error, Result};
use crate::par;
use crate::schema::{Dataset, EncodingMap, FeatureKind, FeatureSchema, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Token {
    /// 1-based decile index.
    Decile(u8),
    /// Encoded categorical code (the missing sentinel included).
    Value(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Item {
    pub feature: u16,
    pub token: Token,
}

impl Item {
    /// `<FeatureName>_D<x>` or `<FeatureName>_V<raw value>`.
    pub fn render(&self, schema: &FeatureSchema, encoding: &EncodingMap) -> String {
        let j = self.feature as usize;
        let name = &schema.spec(j).name;
        match self.token {
            Token::Decile(d) => format!("{name}_D{d}"),
            Token::Value(code) => match encoding.decode(j, code as f64) {
                Some(raw) => format!("{name}_V{raw}"),
                None => format!("{name}_V{code}"),
            },
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.token {
            Token::Decile(d) => write!(f, "#{}_D{d}", self.feature),
            Token::Value(v) => write!(f, "#{}_V{v}", self.feature),
        }
    }
}

/// One stop as a set of items, one per feature, in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub items: Vec<Item>,
    pub outcome: Outcome,
}

impl Transaction {
    pub fn contains(&self, item: &Item) -> bool {
        self.items.get(item.feature as usize) == Some(item)
    }

    pub fn consequent(&self) -> Option<String> {
        match self.outcome {
            Outcome::Success => None,
            Outcome::Failed(t) => Some(t.consequent_token()),
        }
    }
}

pub fn itemize(schema: &FeatureSchema, binner: &DecileBinner, row: &[f64], outcome: Outcome) -> Result<Transaction> {
    if row.len() != schema.len() {
        return Err(Error::WidthMismatch { expected: schema.len(), found: row.len() });
    }
    let items = row
        .iter()
        .enumerate()
        .map(|(j, &v)| Item {
            feature: j as u16,
            token: match schema.spec(j).kind {
                FeatureKind::Numerical => Token::Decile(binner.bin(j, v) as u8),
                FeatureKind::Categorical => Token::Value(v as i64),
            },
        })
        .collect();
    Ok(Transaction { items, outcome })
}

pub fn itemize_dataset(dataset: &Dataset, binner: &DecileBinner) -> Vec<Transaction> {
    par::map_range(dataset.len(), |i| {
        itemize(&dataset.schema, binner, dataset.x.row(i), dataset.labels[i]).expect("dataset width matches schema")
    })
}

/// Number of transactions containing each itemset, in one pass.
pub fn count_support(itemsets: &[Vec<Item>], transactions: &[Transaction]) -> Vec<usize> {
    let mut by_first: HashMap<Item, Vec<usize>> = HashMap::new();
    for (k, set) in itemsets.iter().enumerate() {
        if let Some(first) = set.first() {
            by_first.entry(*first).or_default().push(k);
        }
    }
    par::fold_range(
        transactions.len(),
        || vec![0usize; itemsets.len()],
        |acc, i| {
            let tx = &transactions[i];
            for item in &tx.items {
                if let Some(ks) = by_first.get(item) {
                    for &k in ks {
                        if itemsets[k][1..].iter().all(|it| tx.contains(it)) {
                            acc[k] += 1;
                        }
                    }
                }
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    )
    .into_iter()
    .zip(itemsets)
    .map(|(c, s)| if s.is_empty() { transactions.len() } else { c })
    .collect()
}
