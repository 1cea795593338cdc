//! Interest-ratio association rules between stop features and failures.
//!
//! Numerical features are cut into deciles over the whole corpus `C`,
//! categorical ones become value items. Itemsets frequent in the failed set
//! `F` of one failure type are found with FP-growth, their support in `C` is
//! counted in one pass, and each `x => FAIL_T` rule is scored with
//!
//! ```text
//! phi = (sup_F(x) / |F|) * (|C| / sup_C(x))
//! IR  = max(phi, 1 / phi)
//! ```
//!
//! Confidence `sup_F / sup_C` equals `phi * |F| / |C|`.

mod binning;
mod filter;
mod fpgrowth;
mod items;
mod render;
mod score;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{failed_subset, Dataset, EncodingMap, FailureType, FeatureSchema};

pub use binning::{quantile, DecileBinner, FeatureBins};
pub use filter::{filter_rules, FilterParams, ParentScope, RuleGroup, Selection};
pub use fpgrowth::frequent_itemsets;
pub use items::{count_support, itemize, itemize_dataset, Item, Token, Transaction};
pub use render::{percent, render_text, rule_rows, write_csv, RenderContext, RuleRow};
pub use score::{score, AssociationRule, Sign};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerOverride {
    pub s: Option<f64>,
    pub min_ir: Option<f64>,
    pub delta_ir: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    /// Minimum support as a fraction of `|F|`.
    pub s: f64,
    pub min_ir: f64,
    pub delta_ir: f64,
    pub max_size: usize,
    pub parent_scope: ParentScope,
    pub overrides: BTreeMap<FailureType, MinerOverride>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            s: 0.1,
            min_ir: 1.4,
            delta_ir: 0.1,
            max_size: 2,
            parent_scope: ParentScope::Selected,
            overrides: BTreeMap::new(),
        }
    }
}

impl MinerConfig {
    /// Settings for `t` with its overrides applied.
    pub fn for_type(&self, t: FailureType) -> MinerConfig {
        let o = self.overrides.get(&t).copied().unwrap_or_default();
        MinerConfig {
            s: o.s.unwrap_or(self.s),
            min_ir: o.min_ir.unwrap_or(self.min_ir),
            delta_ir: o.delta_ir.unwrap_or(self.delta_ir),
            overrides: BTreeMap::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |s: f64, min_ir: f64, delta_ir: f64| -> Result<()> {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::InvalidConfig(format!("support threshold s must be in (0, 1], got {s}")));
            }
            if !(min_ir >= 1.0) {
                return Err(Error::InvalidConfig(format!("min_ir must be at least 1, got {min_ir}")));
            }
            if !(delta_ir >= 0.0) {
                return Err(Error::InvalidConfig(format!("delta_ir must be non-negative, got {delta_ir}")));
            }
            Ok(())
        };
        if !(1..=2).contains(&self.max_size) {
            return Err(Error::InvalidConfig(format!("max_size must be 1 or 2, got {}", self.max_size)));
        }
        check(self.s, self.min_ir, self.delta_ir)?;
        for &t in self.overrides.keys() {
            let c = self.for_type(t);
            check(c.s, c.min_ir, c.delta_ir)?;
        }
        Ok(())
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams { min_ir: self.min_ir, delta_ir: self.delta_ir, parent_scope: self.parent_scope }
    }

    /// `ceil(s * |F|)`, at least 1.
    pub fn min_count(&self, n_f: usize) -> usize {
        ((self.s * n_f as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Rules mined for one failure type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinedRules {
    pub failure_type: FailureType,
    pub config: MinerConfig,
    pub n_f: usize,
    pub n_c: usize,
    /// Every rule whose antecedent is frequent in `F`, sorted by size then
    /// items.
    pub scored: Vec<AssociationRule>,
    pub selection: Selection,
}

/// A corpus prepared for mining: deciles fit and every stop itemized.
#[derive(Debug, Clone)]
pub struct RuleMiner {
    pub schema: FeatureSchema,
    pub encoding: EncodingMap,
    pub binner: DecileBinner,
    pub transactions: Vec<Transaction>,
    failed: BTreeMap<FailureType, Vec<usize>>,
}

impl RuleMiner {
    pub fn new(dataset: &Dataset) -> Result<RuleMiner> {
        let binner = DecileBinner::fit(dataset)?;
        let transactions = itemize_dataset(dataset, &binner);
        let failed = FailureType::ALL.iter().map(|&t| (t, failed_subset(dataset, t))).collect();
        Ok(RuleMiner { schema: dataset.schema.clone(), encoding: dataset.encoding.clone(), binner, transactions, failed })
    }

    pub fn context(&self) -> RenderContext<'_> {
        RenderContext { schema: &self.schema, encoding: &self.encoding, binner: &self.binner }
    }

    pub fn n_failed(&self, t: FailureType) -> usize {
        self.failed[&t].len()
    }

    /// Mines `x => FAIL_t`. Fails with `EmptyClass` when no stop failed
    /// with `t`.
    pub fn mine(&self, t: FailureType, config: &MinerConfig) -> Result<MinedRules> {
        config.validate()?;
        let cfg = config.for_type(t);
        let rows = &self.failed[&t];
        if rows.is_empty() {
            return Err(Error::EmptyClass(format!("no stop failed with {}", t.as_str())));
        }
        let f: Vec<Vec<Item>> = rows.iter().map(|&i| self.transactions[i].items.clone()).collect();
        let frequent = frequent_itemsets(&f, cfg.min_count(f.len()), cfg.max_size);
        let sets: Vec<Vec<Item>> = frequent.iter().map(|(s, _)| s.clone()).collect();
        let sup_c = count_support(&sets, &self.transactions);
        let (n_f, n_c) = (f.len(), self.transactions.len());
        let scored = frequent
            .into_iter()
            .zip(sup_c)
            .map(|((set, sup_f), sup_c)| score(set, t, sup_f, sup_c, n_f, n_c))
            .collect::<Result<Vec<_>>>()?;
        let selection = filter_rules(&scored, &cfg.filter_params());
        Ok(MinedRules { failure_type: t, config: cfg, n_f, n_c, scored, selection })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(MinerConfig::default().validate().is_ok());
        assert!(MinerConfig { min_ir: 0.9, ..Default::default() }.validate().is_err());
        assert!(MinerConfig { s: 0.0, ..Default::default() }.validate().is_err());
        assert!(MinerConfig { delta_ir: -0.1, ..Default::default() }.validate().is_err());
        assert!(MinerConfig { max_size: 3, ..Default::default() }.validate().is_err());
        let mut c = MinerConfig::default();
        c.overrides.insert(FailureType::Ns, MinerOverride { min_ir: Some(0.5), ..Default::default() });
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_from_toml() {
        let c: MinerConfig = toml::from_str(
            "min_ir = 1.4\n[overrides.NS]\nmin_ir = 1.9\ndelta_ir = 0.5\n",
        )
        .unwrap();
        let ns = c.for_type(FailureType::Ns);
        assert_eq!((ns.s, ns.min_ir, ns.delta_ir), (0.1, 1.9, 0.5));
        assert_eq!(c.for_type(FailureType::Nah).min_ir, 1.4);
    }

    #[test]
    fn min_count_is_ceiling() {
        let c = MinerConfig::default();
        assert_eq!(c.min_count(100), 10);
        assert_eq!(c.min_count(101), 11);
        assert_eq!(c.min_count(3), 1);
        assert_eq!(MinerConfig { s: 1.0, ..c }.min_count(7), 7);
    }
}
