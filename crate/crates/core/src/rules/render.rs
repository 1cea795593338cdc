use std::io::Write;

use super::binning::DecileBinner;
use super::filter::Selection;
use super::items::{Item, Token};
use super::score::AssociationRule;
use crate::error::{Error, Result};
use crate::schema::{EncodingMap, FeatureSchema};

/// What an item needs to be printed with names and bin intervals.
#[derive(Debug, Clone, Copy)]
pub struct RenderContext<'a> {
    pub schema: &'a FeatureSchema,
    pub encoding: &'a EncodingMap,
    pub binner: &'a DecileBinner,
}

impl RenderContext<'_> {
    pub fn item(&self, item: &Item) -> String {
        item.render(self.schema, self.encoding)
    }

    /// `(C9) IdZone_V209`.
    pub fn coded_item(&self, item: &Item) -> String {
        format!("({}) {}", self.schema.spec(item.feature as usize).code, self.item(item))
    }

    pub fn antecedent(&self, rule: &AssociationRule) -> String {
        rule.antecedent.iter().map(|i| self.item(i)).collect::<Vec<_>>().join(" & ")
    }

    fn interval(&self, item: &Item) -> Option<String> {
        match item.token {
            Token::Decile(d) => self.binner.label(item.feature as usize, d as usize),
            Token::Value(_) => None,
        }
    }
}

/// One displayed row: `depth` 0 for a parent, 1 for a nested child, whose
/// `shown` items omit the parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRow<'a> {
    pub id: usize,
    pub depth: usize,
    pub shown: Vec<Item>,
    pub rule: &'a AssociationRule,
}

pub fn rule_rows(selection: &Selection) -> Vec<RuleRow<'_>> {
    let mut rows = Vec::new();
    for g in &selection.groups {
        rows.push(RuleRow { id: rows.len() + 1, depth: 0, shown: g.parent.antecedent.clone(), rule: &g.parent });
        for c in &g.children {
            let shown = c.antecedent.iter().filter(|i| !g.parent.antecedent.contains(i)).copied().collect();
            rows.push(RuleRow { id: rows.len() + 1, depth: 1, shown, rule: c });
        }
    }
    for r in &selection.unplaced {
        rows.push(RuleRow { id: rows.len() + 1, depth: 0, shown: r.antecedent.clone(), rule: r });
    }
    rows
}

/// Confidence as a percentage with one decimal.
pub fn percent(confidence: f64) -> String {
    format!("{:.1}", confidence * 100.0)
}

/// Aligned table: id, indented antecedent, confidence (%), IR, sign. Bin
/// intervals of the decile items shown follow the table.
pub fn render_text(selection: &Selection, ctx: &RenderContext<'_>, title: &str) -> String {
    let rows = rule_rows(selection);
    let cells: Vec<String> = rows
        .iter()
        .map(|r| {
            let items = r.shown.iter().map(|i| ctx.coded_item(i)).collect::<Vec<_>>().join(", ");
            format!("{}{}", "    ".repeat(r.depth), items)
        })
        .collect();
    let width = cells.iter().map(|c| c.chars().count()).max().unwrap_or(0).max("rule".len());
    let mut out = format!("{title}\n");
    out.push_str(&format!("{:>3}  {:<width$}  {:>8}  {:>6}  {}\n", "#", "rule", "conf(%)", "IR", "sign"));
    for (r, cell) in rows.iter().zip(&cells) {
        out.push_str(&format!(
            "{:>3}  {:<width$}  {:>8}  {:>6.2}  {} {}\n",
            r.id,
            cell,
            percent(r.rule.confidence),
            r.rule.ir,
            r.rule.sign.symbol(),
            r.rule.sign.color()
        ));
    }
    if rows.is_empty() {
        out.push_str("(no rules selected)\n");
    }
    let mut bins: Vec<Item> = rows.iter().flat_map(|r| r.shown.iter().copied()).filter(|i| matches!(i.token, Token::Decile(_))).collect();
    bins.sort();
    bins.dedup();
    if !bins.is_empty() {
        out.push_str("\nbins\n");
        for i in bins {
            if let Some(iv) = ctx.interval(&i) {
                out.push_str(&format!("  {} {}\n", ctx.item(&i), iv));
            }
        }
    }
    out
}

pub fn write_csv<W: Write>(selection: &Selection, ctx: &RenderContext<'_>, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["id", "depth", "antecedent", "consequent", "sup_F", "sup_C", "phi", "ir", "confidence", "sign"])?;
    for r in rule_rows(selection) {
        csv.write_record([
            r.id.to_string(),
            r.depth.to_string(),
            ctx.antecedent(r.rule),
            r.rule.consequent.consequent_token(),
            r.rule.sup_f.to_string(),
            r.rule.sup_c.to_string(),
            format!("{:.6}", r.rule.phi),
            format!("{:.6}", r.rule.ir),
            format!("{:.6}", r.rule.confidence),
            r.rule.sign.symbol().to_string(),
        ])?;
    }
    csv.flush().map_err(|e| Error::Csv(e.to_string()))
}
