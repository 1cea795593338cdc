//! Synthetic stop datasets with planted feature/failure associations.
//!
//! Features are drawn independently. Each failure type `t` has a base rate
//! `b_t`; a row's probability of failing with `t` is `b_t` times the product
//! of the multipliers of every planted rule for `t` whose antecedent the row
//! satisfies, clamped to `[0, 1]`. One categorical draw then picks at most
//! one failure type per stop.
//!
//! Because features are independent, a lone single-item rule with
//! multiplier `m` on an antecedent of prevalence `p` has the large-sample
//! ratio `phi = m / (1 + p (m - 1))`, which [`expected_phi`] returns.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::par;
use crate::schema::{
    builtin_schema, Dataset, EncodingMap, FailureType, FeatureKind, FeatureSchema, Outcome,
    MISSING_SENTINEL,
};
use crate::seed;

/// Sampling law of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureDist {
    Categorical {
        values: Vec<String>,
        /// Uniform when absent.
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        missing: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
        /// Draw integers in `lo..=hi` instead of reals in `[lo, hi)`.
        #[serde(default)]
        integer: bool,
        #[serde(default)]
        missing: f64,
    },
}

impl FeatureDist {
    fn categorical_range(lo: u32, hi: u32, missing: f64) -> Self {
        FeatureDist::Categorical {
            values: (lo..=hi).map(|v| v.to_string()).collect(),
            weights: None,
            missing,
        }
    }

    fn weighted(pairs: &[(&str, f64)]) -> Self {
        FeatureDist::Categorical {
            values: pairs.iter().map(|(v, _)| v.to_string()).collect(),
            weights: Some(pairs.iter().map(|&(_, w)| w).collect()),
            missing: 0.0,
        }
    }

    fn uniform(lo: f64, hi: f64, integer: bool) -> Self {
        FeatureDist::Uniform { lo, hi, integer, missing: 0.0 }
    }

    fn missing(&self) -> f64 {
        match self {
            FeatureDist::Categorical { missing, .. } | FeatureDist::Uniform { missing, .. } => *missing,
        }
    }
}

/// Default per-feature laws, loosely shaped after a Canadian last-mile
/// delivery operation (missing rates for door number, apartment and
/// manufacturer included).
pub fn default_feature_dists() -> BTreeMap<String, FeatureDist> {
    let mut p3: Vec<(String, f64)> = vec![("2".into(), 0.5), ("3".into(), 0.2)];
    p3.extend((4..=21).map(|v| (v.to_string(), 0.3 / 18.0)));
    let mut company: Vec<(String, f64)> = vec![("3".into(), 0.15), ("39".into(), 0.10), ("8".into(), 0.08)];
    company.extend((100..=146).map(|v| (v.to_string(), 0.67 / 47.0)));

    let owned = |pairs: Vec<(String, f64)>| FeatureDist::Categorical {
        values: pairs.iter().map(|(v, _)| v.clone()).collect(),
        weights: Some(pairs.iter().map(|(_, w)| *w).collect()),
        missing: 0.0,
    };

    let entries: Vec<(&str, FeatureDist)> = vec![
        ("C1", FeatureDist::uniform(-79.6, -73.3, false)),
        ("C2", FeatureDist::uniform(43.5, 46.4, false)),
        ("C3", FeatureDist::categorical_range(1, 200, 0.086)),
        ("C4", FeatureDist::categorical_range(1, 300, 0.0)),
        ("C5", FeatureDist::categorical_range(1, 50, 0.827)),
        ("C6", FeatureDist::categorical_range(1, 40, 0.0)),
        ("C7", FeatureDist::weighted(&[("1", 0.6), ("2", 0.4)])),
        ("C8", FeatureDist::categorical_range(1, 500, 0.0)),
        ("C9", FeatureDist::categorical_range(1, 30, 0.0)),
        ("R1", FeatureDist::categorical_range(1, 60, 0.0)),
        ("R2", FeatureDist::categorical_range(1, 80, 0.0)),
        ("R3", FeatureDist::uniform(1.0, 36.0, true)),
        ("R4", FeatureDist::uniform(360.0, 1260.0, true)),
        ("R5", FeatureDist::uniform(0.0, 40.0, false)),
        ("R6", FeatureDist::uniform(0.0, 60.0, false)),
        ("R7", FeatureDist::uniform(360.0, 1080.0, true)),
        ("R8", FeatureDist::uniform(480.0, 1260.0, true)),
        ("R9", FeatureDist::uniform(60.0, 360.0, true)),
        ("R10", FeatureDist::uniform(-60.0, 300.0, true)),
        ("R11", FeatureDist::uniform(-120.0, 300.0, true)),
        ("P1", FeatureDist::weighted(&[("1", 0.7), ("0", 0.3)])),
        ("P2", FeatureDist::weighted(&[("5", 0.55), ("6", 0.45)])),
        ("P3", owned(p3)),
        ("D1", FeatureDist::categorical_range(1, 52, 0.0)),
        ("D2", FeatureDist::categorical_range_list(&["1", "2", "4", "5", "6", "7", "8"])),
        ("D3", FeatureDist::categorical_range(1, 7, 0.0)),
        ("S1", FeatureDist::weighted(&[("Delivery", 0.8), ("Pickup", 0.2)])),
        ("S2", owned(company)),
        ("S3", FeatureDist::uniform(0.0, 120.0, false)),
        ("S4", FeatureDist::uniform(0.0, 500.0, false)),
        ("S5", FeatureDist::categorical_range(1, 100, 0.908)),
        ("S6", FeatureDist::uniform(60.0, 3600.0, true)),
    ];
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl FeatureDist {
    fn categorical_range_list(values: &[&str]) -> Self {
        FeatureDist::Categorical {
            values: values.iter().map(|v| v.to_string()).collect(),
            weights: None,
            missing: 0.0,
        }
    }
}

/// One antecedent item: a categorical value or a numerical interval
/// `(lo, hi]`. Missing values never match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub feature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

impl Condition {
    pub fn equals(feature: &str, value: &str) -> Self {
        Condition { feature: feature.into(), equals: Some(value.into()), range: None }
    }

    pub fn range(feature: &str, lo: f64, hi: f64) -> Self {
        Condition { feature: feature.into(), equals: None, range: Some([lo, hi]) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedRule {
    pub when: Vec<Condition>,
    pub target: FailureType,
    pub multiplier: f64,
}

fn default_base_rates() -> BTreeMap<FailureType, f64> {
    BTreeMap::from([
        (FailureType::Nah, 0.0146),
        (FailureType::Sr, 0.0080),
        (FailureType::Rc, 0.0060),
        (FailureType::Cc, 0.0049),
        (FailureType::Ns, 0.0034),
        (FailureType::Other, 0.0299),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_stops: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per failure type; types left out keep their default rate.
    #[serde(default)]
    pub base_rates: BTreeMap<FailureType, f64>,
    /// Overrides keyed by feature code or name; other features use
    /// [`default_feature_dists`].
    #[serde(default)]
    pub features: BTreeMap<String, FeatureDist>,
    #[serde(default)]
    pub planted: Vec<PlantedRule>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_stops: 10_000,
            seed: 0,
            base_rates: BTreeMap::new(),
            features: BTreeMap::new(),
            planted: Vec::new(),
        }
    }
}

impl GeneratorConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Base rates with defaults filled in for unlisted types.
    pub fn effective_base_rates(&self) -> BTreeMap<FailureType, f64> {
        let mut rates = default_base_rates();
        rates.extend(self.base_rates.iter().map(|(&k, &v)| (k, v)));
        rates
    }
}

#[derive(Debug, Clone)]
enum Law {
    Categorical { values: Vec<String>, index: WeightedIndex<f64>, probs: Vec<f64> },
    Uniform { lo: f64, hi: f64, integer: bool },
}

#[derive(Debug, Clone)]
enum Test {
    Equals(usize),
    Never,
    Range(f64, f64),
}

#[derive(Debug, Clone)]
struct ResolvedRule {
    tests: Vec<(usize, Test)>,
    target: usize,
    multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Draw {
    Missing,
    Category(usize),
    Value(f64),
}

/// Validated, schema-resolved generator.
#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
    schema: FeatureSchema,
    laws: Vec<(Law, f64)>,
    rates: Vec<f64>,
    rules: Vec<ResolvedRule>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl Generator {
    pub fn new(config: &GeneratorConfig) -> Result<Self> {
        let schema = builtin_schema();
        if config.n_stops == 0 {
            return Err(invalid("n_stops must be positive"));
        }

        let rates_map = config.effective_base_rates();
        let rates: Vec<f64> = FailureType::ALL.iter().map(|t| rates_map[t]).collect();
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("base rates must lie in [0, 1]"));
        }
        if rates.iter().sum::<f64>() >= 1.0 {
            return Err(invalid("base rates must sum to less than 1"));
        }

        let mut dists: Vec<Option<FeatureDist>> = vec![None; schema.len()];
        for (k, d) in default_feature_dists() {
            dists[schema.index_of(&k).expect("default dist keys are schema codes")] = Some(d);
        }
        for (k, d) in &config.features {
            let j = schema.index_of(k).ok_or_else(|| invalid(format!("unknown feature {k:?}")))?;
            dists[j] = Some(d.clone());
        }

        let mut laws = Vec::with_capacity(schema.len());
        for (j, d) in dists.into_iter().enumerate() {
            let d = d.expect("every feature has a law");
            let spec = schema.spec(j);
            let missing = d.missing();
            if !(0.0..1.0).contains(&missing) {
                return Err(invalid(format!("{}: missing rate must lie in [0, 1)", spec.code)));
            }
            let law = match d {
                FeatureDist::Categorical { values, weights, .. } => {
                    if spec.kind != FeatureKind::Categorical {
                        return Err(invalid(format!("{} is numerical", spec.code)));
                    }
                    if values.is_empty() {
                        return Err(invalid(format!("{}: no categorical values", spec.code)));
                    }
                    let w = weights.unwrap_or_else(|| vec![1.0; values.len()]);
                    if w.len() != values.len() || w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                        return Err(invalid(format!("{}: bad weights", spec.code)));
                    }
                    let total: f64 = w.iter().sum();
                    let index = WeightedIndex::new(&w).map_err(|e| invalid(format!("{}: {e}", spec.code)))?;
                    Law::Categorical { values, index, probs: w.iter().map(|x| x / total).collect() }
                }
                FeatureDist::Uniform { lo, hi, integer, .. } => {
                    if spec.kind != FeatureKind::Numerical {
                        return Err(invalid(format!("{} is categorical", spec.code)));
                    }
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(invalid(format!("{}: need finite lo < hi", spec.code)));
                    }
                    if integer && (lo.fract() != 0.0 || hi.fract() != 0.0) {
                        return Err(invalid(format!("{}: integer bounds required", spec.code)));
                    }
                    Law::Uniform { lo, hi, integer }
                }
            };
            laws.push((law, missing));
        }

        let mut rules = Vec::with_capacity(config.planted.len());
        for (r, rule) in config.planted.iter().enumerate() {
            if !(rule.multiplier > 0.0) || !rule.multiplier.is_finite() {
                return Err(invalid(format!("planted rule {r}: multiplier must be positive")));
            }
            if rule.when.is_empty() || rule.when.len() > 2 {
                return Err(invalid(format!("planted rule {r}: antecedent size must be 1 or 2")));
            }
            let mut tests = Vec::new();
            for c in &rule.when {
                let j = schema
                    .index_of(&c.feature)
                    .ok_or_else(|| invalid(format!("planted rule {r}: unknown feature {:?}", c.feature)))?;
                if tests.iter().any(|(k, _)| *k == j) {
                    return Err(invalid(format!("planted rule {r}: repeated feature {}", c.feature)));
                }
                let test = match (&laws[j].0, &c.equals, &c.range) {
                    (Law::Categorical { values, .. }, Some(v), None) => {
                        values.iter().position(|x| x == v).map_or(Test::Never, Test::Equals)
                    }
                    (Law::Uniform { .. }, None, Some([lo, hi])) if lo < hi => Test::Range(*lo, *hi),
                    _ => {
                        return Err(invalid(format!(
                            "planted rule {r}: {} needs `equals` for categorical or `range = [lo, hi]` for numerical",
                            c.feature
                        )))
                    }
                };
                tests.push((j, test));
            }
            let target = FailureType::ALL.iter().position(|&t| t == rule.target).unwrap();
            rules.push(ResolvedRule { tests, target, multiplier: rule.multiplier });
        }

        Ok(Generator { config: config.clone(), schema, laws, rates, rules })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Population probability that a row satisfies `c`.
    pub fn prevalence(&self, c: &Condition) -> Result<f64> {
        let j = self
            .schema
            .index_of(&c.feature)
            .ok_or_else(|| invalid(format!("unknown feature {:?}", c.feature)))?;
        let (law, missing) = &self.laws[j];
        let present = 1.0 - missing;
        let p = match (law, &c.equals, &c.range) {
            (Law::Categorical { values, probs, .. }, Some(v), None) => {
                values.iter().position(|x| x == v).map_or(0.0, |k| probs[k])
            }
            (Law::Uniform { lo, hi, integer: false }, None, Some([a, b])) => {
                ((b.min(*hi) - a.max(*lo)).max(0.0)) / (hi - lo)
            }
            (Law::Uniform { lo, hi, integer: true }, None, Some([a, b])) => {
                // integers k with a < k <= b inside lo..=hi
                let first = (a.floor() + 1.0).max(*lo);
                let last = b.floor().min(*hi);
                ((last - first + 1.0).max(0.0)) / (hi - lo + 1.0)
            }
            _ => return Err(invalid(format!("condition on {} does not match its law", c.feature))),
        };
        Ok(present * p)
    }

    fn draw_row(&self, i: usize) -> (Vec<Draw>, f64) {
        let mut rng = seed::rng(self.config.seed, "synth-row", &[i as u64]);
        let row = self
            .laws
            .iter()
            .map(|(law, missing)| {
                if *missing > 0.0 && rng.gen::<f64>() < *missing {
                    return Draw::Missing;
                }
                match law {
                    Law::Categorical { index, .. } => Draw::Category(index.sample(&mut rng)),
                    Law::Uniform { lo, hi, integer: true } => {
                        Draw::Value(rng.gen_range(*lo as i64..=*hi as i64) as f64)
                    }
                    Law::Uniform { lo, hi, integer: false } => Draw::Value(rng.gen_range(*lo..*hi)),
                }
            })
            .collect();
        (row, rng.gen())
    }

    fn matches(test: &Test, d: Draw) -> bool {
        match (test, d) {
            (Test::Equals(k), Draw::Category(c)) => *k == c,
            (Test::Range(lo, hi), Draw::Value(v)) => v > *lo && v <= *hi,
            _ => false,
        }
    }

    /// Per-type failure probabilities of a drawn row, after clamping.
    fn probabilities(&self, row: &[Draw]) -> Vec<f64> {
        let mut q = self.rates.clone();
        for r in &self.rules {
            if r.tests.iter().all(|(j, t)| Self::matches(t, row[*j])) {
                q[r.target] *= r.multiplier;
            }
        }
        q.iter_mut().for_each(|v| *v = v.min(1.0));
        q
    }

    /// Draw the dataset. Row `i` depends only on `(seed, i)`.
    pub fn generate(&self) -> Result<Dataset> {
        let n = self.config.n_stops;
        let drawn = par::try_map_range(n, |i| {
            let (row, u) = self.draw_row(i);
            let q = self.probabilities(&row);
            if q.iter().sum::<f64>() >= 1.0 {
                return Err(invalid(format!(
                    "row {i}: planted multipliers push the total failure probability to 1 or more"
                )));
            }
            let mut acc = 0.0;
            let mut outcome = Outcome::Success;
            for (k, p) in q.iter().enumerate() {
                acc += p;
                if u < acc {
                    outcome = Outcome::Failed(FailureType::ALL[k]);
                    break;
                }
            }
            Ok((row, outcome))
        })?;

        let width = self.schema.len();
        let digits = n.saturating_sub(1).to_string().len().max(6);
        let mut enc = EncodingMap::new(&self.schema);
        let mut x = Matrix::with_capacity(width, n);
        let mut labels = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        let mut buf = vec![0.0; width];
        for (i, (row, outcome)) in drawn.into_iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                buf[j] = match (*d, &self.laws[j].0) {
                    (Draw::Missing, _) => MISSING_SENTINEL,
                    (Draw::Value(v), _) => v,
                    (Draw::Category(c), Law::Categorical { values, .. }) => enc.encode(j, &values[c]),
                    (Draw::Category(_), Law::Uniform { .. }) => unreachable!(),
                };
            }
            x.push_row(&buf)?;
            labels.push(outcome);
            ids.push(format!("stop-{i:0digits$}"));
        }
        Dataset::new(self.schema.clone(), x, labels, ids, enc)
    }

    /// Planted rules with their prevalence and, where the closed form
    /// applies, the expected phi and IR.
    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let mut planted = Vec::new();
        for (r, rule) in self.config.planted.iter().enumerate() {
            let mut p = 1.0;
            for c in &rule.when {
                p *= self.prevalence(c)?;
            }
            let same_target = self.rules.iter().filter(|x| x.target == self.rules[r].target).count();
            let rate = self.rates[self.rules[r].target];
            let isolated = same_target == 1 && rate * rule.multiplier <= 1.0;
            let phi = isolated.then(|| expected_phi(rule.multiplier, p));
            planted.push(PlantedTruth {
                rule: rule.clone(),
                prevalence: p,
                isolated,
                expected_phi: phi,
                expected_ir: phi.map(|f| f.max(1.0 / f)),
            });
        }
        Ok(GroundTruth {
            seed: self.config.seed,
            n_stops: self.config.n_stops,
            base_rates: self.config.effective_base_rates(),
            planted,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedTruth {
    pub rule: PlantedRule,
    pub prevalence: f64,
    /// No other planted rule targets the same type and nothing is clamped,
    /// so the closed form below is exact.
    pub isolated: bool,
    pub expected_phi: Option<f64>,
    pub expected_ir: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_stops: usize,
    pub base_rates: BTreeMap<FailureType, f64>,
    pub planted: Vec<PlantedTruth>,
}

pub fn generate(config: &GeneratorConfig) -> Result<Dataset> {
    Generator::new(config)?.generate()
}

/// Large-sample phi of a lone planted rule with multiplier `m` on an
/// antecedent of population prevalence `p`.
pub fn expected_phi(m: f64, p: f64) -> f64 {
    m / (1.0 + p * (m - 1.0))
}

/// `max(phi, 1/phi)` of [`expected_phi`].
pub fn expected_ir(m: f64, p: f64) -> f64 {
    let phi = expected_phi(m, p);
    phi.max(1.0 / phi)
}
