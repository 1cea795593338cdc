use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::score::AssociationRule;

/// Which size-1 rules may serve as the reference parent of a size-2 rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParentScope {
    /// Only size-1 rules that pass `min_ir` themselves.
    #[default]
    Selected,
    /// Any scored size-1 rule.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub min_ir: f64,
    pub delta_ir: f64,
    pub parent_scope: ParentScope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleGroup {
    pub parent: AssociationRule,
    pub children: Vec<AssociationRule>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Selection {
    pub groups: Vec<RuleGroup>,
    /// Size-2 rules admitted through a parent that is not displayed. Always
    /// empty under `ParentScope::Selected`.
    pub unplaced: Vec<AssociationRule>,
}

impl Selection {
    /// Rules in display order.
    pub fn rules(&self) -> impl Iterator<Item = &AssociationRule> {
        self.groups
            .iter()
            .flat_map(|g| std::iter::once(&g.parent).chain(&g.children))
            .chain(&self.unplaced)
    }

    pub fn len(&self) -> usize {
        self.rules().count()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty() && self.unplaced.is_empty()
    }
}

fn by_ir_desc(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    b.ir.total_cmp(&a.ir).then_with(|| a.antecedent.cmp(&b.antecedent))
}

fn shares_item(child: &AssociationRule, parent: &AssociationRule) -> bool {
    parent.antecedent.len() == 1 && child.antecedent.contains(&parent.antecedent[0])
}

/// Keeps size-1 rules with `ir >= min_ir`, and size-2 rules with
/// `ir >= min_ir` that beat a parent sharing one of their items by at least
/// `delta_ir`. Parents are ordered by descending IR; each size-2 rule is
/// nested once, under the first displayed parent it qualifies against, and
/// children are ordered by descending IR. Rules larger than 2 are ignored.
pub fn filter_rules(rules: &[AssociationRule], params: &FilterParams) -> Selection {
    let mut parents: Vec<&AssociationRule> =
        rules.iter().filter(|r| r.size() == 1 && r.ir >= params.min_ir).collect();
    parents.sort_by(|a, b| by_ir_desc(a, b));
    let reference: Vec<&AssociationRule> = match params.parent_scope {
        ParentScope::Selected => parents.clone(),
        ParentScope::All => rules.iter().filter(|r| r.size() == 1).collect(),
    };
    let qualifies = |c: &AssociationRule, p: &AssociationRule| shares_item(c, p) && c.ir - p.ir >= params.delta_ir;

    let mut children: Vec<&AssociationRule> = rules
        .iter()
        .filter(|r| r.size() == 2 && r.ir >= params.min_ir)
        .filter(|c| reference.iter().any(|p| qualifies(c, p)))
        .collect();
    children.sort_by(|a, b| by_ir_desc(a, b));

    let mut groups: Vec<RuleGroup> =
        parents.iter().map(|&p| RuleGroup { parent: p.clone(), children: Vec::new() }).collect();
    let mut unplaced = Vec::new();
    for c in children {
        match parents.iter().position(|p| qualifies(c, p)) {
            Some(g) => groups[g].children.push(c.clone()),
            None => unplaced.push(c.clone()),
        }
    }
    Selection { groups, unplaced }
}
