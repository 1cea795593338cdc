//! Feature schema, outcomes, categorical encoding and the stop-level
//! dataset shared by every stage.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{BinaryData, Matrix};
use crate::error::{Error, Result};

/// Value written in place of a missing cell. It takes part in every
/// downstream computation as the plain number -100.
pub const MISSING_SENTINEL: f64 = -100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Numerical,
    Categorical,
}

/// Whether a feature describes the stop itself or one of its services.
/// Service features are aggregated into the stop's master service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureScope {
    Stop,
    Service,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub code: String,
    pub kind: FeatureKind,
    pub scope: FeatureScope,
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    specs: Vec<FeatureSpec>,
}

impl FeatureSchema {
    pub fn new(specs: Vec<FeatureSpec>) -> Result<Self> {
        let mut codes = IndexSet::new();
        let mut names = IndexSet::new();
        for s in &specs {
            if !codes.insert(s.code.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate feature code {}", s.code)));
            }
            if !names.insert(s.name.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate feature name {}", s.name)));
            }
        }
        Ok(FeatureSchema { specs })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn spec(&self, index: usize) -> &FeatureSpec {
        &self.specs[index]
    }

    /// Column index of a feature looked up by code (`P3`) or name
    /// (`IdOutboundCallAttemptResult`), case-insensitively.
    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.specs
            .iter()
            .position(|s| s.code.eq_ignore_ascii_case(key) || s.name.eq_ignore_ascii_case(key))
    }

    /// Hex digest identifying the column layout.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.specs {
            h.update(format!("{}:{}:{:?}:{:?}\n", s.code, s.name, s.kind, s.scope));
        }
        hex(&h.finalize()[..16])
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The 32 stop and service features of the delivery dataset, in column
/// order: location (C1-C9), route schedule (R1-R11), phone calls (P1-P3),
/// date (D1-D3) and master-service features (S1-S6).
pub fn builtin_schema() -> FeatureSchema {
    use FeatureKind::{Categorical as Cat, Numerical as Num};
    use FeatureScope::{Service, Stop};
    let rows: [(&str, &str, FeatureKind, FeatureScope, Option<&str>); 32] = [
        ("C1", "Longitude", Num, Stop, Some("deg")),
        ("C2", "Latitude", Num, Stop, Some("deg")),
        ("C3", "DoorNumber", Cat, Stop, None),
        ("C4", "Street", Cat, Stop, None),
        ("C5", "AptUnit", Cat, Stop, None),
        ("C6", "City", Cat, Stop, None),
        ("C7", "IdProvince", Cat, Stop, None),
        ("C8", "PostalCode", Cat, Stop, None),
        ("C9", "IdZone", Cat, Stop, None),
        ("R1", "IdTruck", Cat, Stop, None),
        ("R2", "IdDriver", Cat, Stop, None),
        ("R3", "RoadOrder", Num, Stop, None),
        ("R4", "PickupDateTime", Num, Stop, Some("min")),
        ("R5", "DistanceFromPrevious", Num, Stop, Some("km")),
        ("R6", "TimeFromPrevious", Num, Stop, Some("min")),
        ("R7", "TimeWindowPickupStartTime", Num, Stop, Some("min")),
        ("R8", "TimeWindowPickupEndTime", Num, Stop, Some("min")),
        ("R9", "TimeWindowSize", Num, Stop, Some("min")),
        ("R10", "StartSlack", Num, Stop, Some("min")),
        ("R11", "EndSlack", Num, Stop, Some("min")),
        ("P1", "IsAutomaticCallAllowed", Cat, Stop, None),
        ("P2", "IdOutboundCallStatus", Cat, Stop, None),
        ("P3", "IdOutboundCallAttemptResult", Cat, Stop, None),
        ("D1", "WeekofYear", Cat, Stop, None),
        ("D2", "Timeofday", Cat, Stop, None),
        ("D3", "Day", Cat, Stop, None),
        ("S1", "IdTaskType", Cat, Service, None),
        ("S2", "IdCompany", Cat, Service, None),
        ("S3", "Volumecf", Num, Service, Some("cf")),
        ("S4", "Weightkg", Num, Service, Some("lbs")),
        ("S5", "IdManufacturer", Cat, Service, None),
        ("S6", "EstimatedJobTime", Num, Service, Some("s")),
    ];
    let specs = rows
        .iter()
        .map(|&(code, name, kind, scope, unit)| FeatureSpec {
            name: name.to_string(),
            code: code.to_string(),
            kind,
            scope,
            unit: unit.map(str::to_string),
        })
        .collect();
    FeatureSchema::new(specs).expect("built-in schema is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureType {
    /// Customer not at home.
    #[serde(rename = "NAH")]
    Nah,
    /// Stop rescheduled by the dispatch center.
    #[serde(rename = "SR")]
    Sr,
    /// Refused by customer.
    #[serde(rename = "RC")]
    Rc,
    /// Canceled by customer.
    #[serde(rename = "CC")]
    Cc,
    /// Not in stock.
    #[serde(rename = "NS")]
    Ns,
    /// Any failure outside the five studied types.
    #[serde(rename = "OTHER")]
    Other,
}

impl FailureType {
    pub const ALL: [FailureType; 6] = [
        FailureType::Nah,
        FailureType::Sr,
        FailureType::Rc,
        FailureType::Cc,
        FailureType::Ns,
        FailureType::Other,
    ];

    /// The five failure types that get their own classifier and rule set.
    pub const STUDIED: [FailureType; 5] =
        [FailureType::Nah, FailureType::Sr, FailureType::Rc, FailureType::Cc, FailureType::Ns];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureType::Nah => "NAH",
            FailureType::Sr => "SR",
            FailureType::Rc => "RC",
            FailureType::Cc => "CC",
            FailureType::Ns => "NS",
            FailureType::Other => "OTHER",
        }
    }

    /// Consequent token used in rule reports, e.g. `FAIL_NAH`.
    pub fn consequent_token(self) -> String {
        format!("FAIL_{}", self.as_str())
    }
}

impl fmt::Display for FailureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NAH" => Ok(FailureType::Nah),
            "SR" => Ok(FailureType::Sr),
            "RC" => Ok(FailureType::Rc),
            "CC" => Ok(FailureType::Cc),
            "NS" => Ok(FailureType::Ns),
            "OTHER" => Ok(FailureType::Other),
            other => Err(Error::InvalidConfig(format!("unknown failure type {other:?}"))),
        }
    }
}

/// Status of a service or stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Success,
    Failed(FailureType),
}

impl Outcome {
    /// Dense code used for deterministic mode tie-breaking (Success first).
    pub fn code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Failed(t) => 1 + FailureType::ALL.iter().position(|&x| x == t).unwrap() as u8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::Failed(t) => t.as_str(),
        }
    }

    pub fn is(self, t: FailureType) -> bool {
        self == Outcome::Failed(t)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("SUCCESS") {
            Ok(Outcome::Success)
        } else {
            s.parse().map(Outcome::Failed)
        }
    }
}

/// Per categorical feature, raw value to dense integer code in
/// first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingMap {
    categories: Vec<Option<IndexSet<String>>>,
    pub missing_sentinel: i64,
}

impl EncodingMap {
    pub fn new(schema: &FeatureSchema) -> Self {
        EncodingMap {
            categories: schema
                .specs()
                .iter()
                .map(|s| (s.kind == FeatureKind::Categorical).then(IndexSet::new))
                .collect(),
            missing_sentinel: MISSING_SENTINEL as i64,
        }
    }

    /// Code for `raw`, assigning the next free code on first sight.
    ///
    /// Panics if `feature` is not categorical.
    pub fn encode(&mut self, feature: usize, raw: &str) -> f64 {
        let set = self.categories[feature].as_mut().expect("categorical feature");
        let (idx, _) = set.insert_full(raw.to_string());
        idx as f64
    }

    pub fn lookup(&self, feature: usize, raw: &str) -> Option<f64> {
        self.categories[feature].as_ref()?.get_index_of(raw).map(|i| i as f64)
    }

    /// Raw value for a code, `None` for the sentinel or an unknown code.
    pub fn decode(&self, feature: usize, code: f64) -> Option<&str> {
        if code < 0.0 || code.fract() != 0.0 {
            return None;
        }
        self.categories[feature].as_ref()?.get_index(code as usize).map(String::as_str)
    }

    pub fn n_codes(&self, feature: usize) -> usize {
        self.categories[feature].as_ref().map_or(0, IndexSet::len)
    }

    pub fn is_categorical(&self, feature: usize) -> bool {
        self.categories[feature].is_some()
    }
}

/// The aggregated corpus: one encoded row per stop.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub x: Matrix,
    pub labels: Vec<Outcome>,
    pub ids: Vec<String>,
    pub encoding: EncodingMap,
}

impl Dataset {
    pub fn new(
        schema: FeatureSchema,
        x: Matrix,
        labels: Vec<Outcome>,
        ids: Vec<String>,
        encoding: EncodingMap,
    ) -> Result<Self> {
        if x.n_cols() != schema.len() {
            return Err(Error::WidthMismatch { expected: schema.len(), found: x.n_cols() });
        }
        if x.n_rows() != labels.len() || ids.len() != labels.len() {
            return Err(Error::WidthMismatch { expected: x.n_rows(), found: labels.len() });
        }
        Ok(Dataset { schema, x, labels, ids, encoding })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.labels.iter().filter(|&&l| l == outcome).count()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            x: self.x.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            encoding: self.encoding.clone(),
        }
    }

    /// One-vs-rest view: rows of type `t` are positive, everything else
    /// (successes and other failure types) negative.
    pub fn binarize(&self, t: FailureType) -> BinaryData {
        BinaryData::new(self.x.clone(), self.labels.iter().map(|l| l.is(t)).collect())
            .expect("dataset rows and labels agree")
    }

    /// Hex digest of ids, labels and encoded values.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.schema.hash());
        for i in 0..self.len() {
            h.update(self.ids[i].as_bytes());
            h.update([0, self.labels[i].code()]);
            for v in self.x.row(i) {
                h.update(v.to_le_bytes());
            }
        }
        hex(&h.finalize()[..16])
    }
}

/// Rows of a dataset carrying one failure type (the failed set F).
#[derive(Debug, Clone, Copy)]
pub struct DatasetView<'a> {
    pub dataset: &'a Dataset,
    pub indices: &'a [usize],
}

/// Indices of the rows labeled with `t`.
pub fn failed_subset(dataset: &Dataset, t: FailureType) -> Vec<usize> {
    dataset
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is(t))
        .map(|(i, _)| i)
        .collect()
}

impl<'a> DatasetView<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn row(&self, k: usize) -> &'a [f64] {
        self.dataset.x.row(self.indices[k])
    }
}
