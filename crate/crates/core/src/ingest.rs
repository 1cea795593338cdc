//! Service-level CSV ingestion: parsing, deduplication, imputation,
//! categorical encoding and aggregation of services into stops.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::schema::{
    Dataset, EncodingMap, FeatureKind, FeatureSchema, FeatureScope, Outcome, MISSING_SENTINEL,
};
use crate::seed;

pub const STOP_ID_COLUMN: &str = "stop_id";
pub const OUTCOME_COLUMN: &str = "outcome";

/// Raw string cells projected onto the canonical column order
/// `stop_id, outcome, <schema features...>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based source line of each row, for error messages.
    pub lines: Vec<usize>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// One encoded service (full schema width; stop-level columns repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceRecord {
    pub stop_id: String,
    pub values: Vec<f64>,
    pub outcome: Outcome,
}

/// One aggregated stop: stop-level features plus its master service.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRecord {
    pub stop_id: String,
    pub values: Vec<f64>,
    pub outcome: Outcome,
}

pub fn parse_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv_reader(std::io::BufReader::new(file), schema)
}

pub fn parse_csv_reader<R: Read>(reader: R, schema: &FeatureSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let file_header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let find = |want: &str, alt: Option<&str>| {
        file_header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(want) || alt.is_some_and(|a| h.eq_ignore_ascii_case(a)))
            .ok_or_else(|| Error::MissingColumn(want.to_string()))
    };
    let mut columns = vec![find(STOP_ID_COLUMN, None)?, find(OUTCOME_COLUMN, None)?];
    for spec in schema.specs() {
        columns.push(find(&spec.name, Some(&spec.code))?);
    }

    let mut header = vec![STOP_ID_COLUMN.to_string(), OUTCOME_COLUMN.to_string()];
    header.extend(schema.specs().iter().map(|s| s.name.clone()));

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push(columns.iter().map(|&c| rec[c].trim().to_string()).collect());
        lines.push(line);
    }
    Ok(RawTable { header, rows, lines })
}

/// Drop rows whose cells all equal an earlier row's; first occurrences keep
/// their order.
pub fn deduplicate(table: &RawTable) -> RawTable {
    let mut seen = HashSet::with_capacity(table.rows.len());
    let mut out = RawTable { header: table.header.clone(), rows: Vec::new(), lines: Vec::new() };
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        if seen.insert(row.as_slice()) {
            out.rows.push(row.clone());
            out.lines.push(line);
        }
    }
    out
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty()
        || cell.eq_ignore_ascii_case("na")
        || cell.eq_ignore_ascii_case("nan")
        || cell.eq_ignore_ascii_case("null")
}

/// Replace missing cells by the sentinel, encode categorical values and
/// parse numerical ones. Unparseable or non-finite numbers count as missing.
pub fn impute_and_encode(
    table: &RawTable,
    schema: &FeatureSchema,
) -> Result<(Vec<ServiceRecord>, EncodingMap)> {
    let mut enc = EncodingMap::new(schema);
    let mut services = Vec::with_capacity(table.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        let outcome: Outcome = row[1]
            .parse()
            .map_err(|_| Error::InvalidOutcome { line, value: row[1].clone() })?;
        let values = schema
            .specs()
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let cell = row[j + 2].as_str();
                if is_missing(cell) {
                    return MISSING_SENTINEL;
                }
                match spec.kind {
                    FeatureKind::Categorical => enc.encode(j, cell),
                    FeatureKind::Numerical => match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => v,
                        _ => MISSING_SENTINEL,
                    },
                }
            })
            .collect();
        services.push(ServiceRecord { stop_id: row[0].clone(), values, outcome });
    }
    Ok((services, enc))
}

/// Most frequent value; ties go to the smallest value.
fn mode_by<T: Copy, K: Ord + Copy>(items: impl Iterator<Item = T>, key: impl Fn(T) -> K) -> Option<T> {
    let mut counts: Vec<(K, T, usize)> = Vec::new();
    for it in items {
        let k = key(it);
        match counts.iter_mut().find(|(kk, _, _)| *kk == k) {
            Some(e) => e.2 += 1,
            None => counts.push((k, it, 1)),
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.2.cmp(&b.2).then(b.0.cmp(&a.0)))
        .map(|(_, v, _)| v)
}

fn total_order_key(v: f64) -> i64 {
    let bits = v.to_bits() as i64;
    bits ^ ((((bits >> 63) as u64) >> 1) as i64)
}

/// Collapse the services of each stop into one master service.
///
/// Categorical service features take the most frequent code, numerical ones
/// the sum of the present values (the sentinel when every service misses
/// the value), and the outcome is the most frequent service outcome. Stops
/// are emitted in order of first appearance.
pub fn aggregate_services(schema: &FeatureSchema, services: &[ServiceRecord]) -> Result<Vec<StopRecord>> {
    let mut groups: IndexMap<&str, Vec<usize>> = IndexMap::new();
    for (i, s) in services.iter().enumerate() {
        if s.values.len() != schema.len() {
            return Err(Error::WidthMismatch { expected: schema.len(), found: s.values.len() });
        }
        groups.entry(s.stop_id.as_str()).or_default().push(i);
    }

    let mut stops = Vec::with_capacity(groups.len());
    for (stop_id, members) in groups {
        let first = &services[members[0]];
        let mut values = Vec::with_capacity(schema.len());
        for (j, spec) in schema.specs().iter().enumerate() {
            let column = members.iter().map(|&m| services[m].values[j]);
            let v = match (spec.scope, spec.kind) {
                (FeatureScope::Stop, _) => {
                    let v0 = first.values[j];
                    if column.clone().any(|v| v.to_bits() != v0.to_bits()) {
                        return Err(Error::InconsistentStopFeatures(stop_id.to_string()));
                    }
                    v0
                }
                (FeatureScope::Service, FeatureKind::Categorical) => {
                    mode_by(column, total_order_key).expect("non-empty group")
                }
                (FeatureScope::Service, FeatureKind::Numerical) => {
                    let present: Vec<f64> = column.filter(|&v| v != MISSING_SENTINEL).collect();
                    if present.is_empty() {
                        MISSING_SENTINEL
                    } else {
                        present.iter().sum()
                    }
                }
            };
            values.push(v);
        }
        let outcome = mode_by(members.iter().map(|&m| services[m].outcome), Outcome::code)
            .expect("non-empty group");
        stops.push(StopRecord { stop_id: stop_id.to_string(), values, outcome });
    }
    Ok(stops)
}

pub fn dataset_from_stops(schema: &FeatureSchema, stops: Vec<StopRecord>, encoding: EncodingMap) -> Result<Dataset> {
    let mut x = Matrix::with_capacity(schema.len(), stops.len());
    let mut labels = Vec::with_capacity(stops.len());
    let mut ids = Vec::with_capacity(stops.len());
    for s in stops {
        x.push_row(&s.values)?;
        labels.push(s.outcome);
        ids.push(s.stop_id);
    }
    Dataset::new(schema.clone(), x, labels, ids, encoding)
}

/// Parse, deduplicate, encode and aggregate a service-level CSV file.
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let table = deduplicate(&parse_csv(path, schema)?);
    let (services, enc) = impute_and_encode(&table, schema)?;
    let stops = aggregate_services(schema, &services)?;
    dataset_from_stops(schema, stops, enc)
}

/// Write a dataset as a CSV in the ingest format (one service per stop),
/// decoding categorical codes and leaving sentinel cells empty.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![STOP_ID_COLUMN.to_string(), OUTCOME_COLUMN.to_string()];
    header.extend(dataset.schema.specs().iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..dataset.len() {
        record.clear();
        record.push(dataset.ids[i].clone());
        record.push(dataset.labels[i].as_str().to_string());
        for (j, &v) in dataset.x.row(i).iter().enumerate() {
            let cell = if v == MISSING_SENTINEL {
                String::new()
            } else if dataset.encoding.is_categorical(j) {
                dataset.encoding.decode(j, v).map(str::to_string).unwrap_or_else(|| v.to_string())
            } else {
                v.to_string()
            };
            record.push(cell);
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Number of rows per stratum going to the first part: each stratum gets
/// `floor(ratio * n)` plus one for the largest remainders until the total
/// equals `round(ratio * N)`.
pub(crate) fn allocate(strata: &[usize], ratio: f64) -> Vec<usize> {
    let total: usize = strata.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let mut alloc: Vec<usize> = strata.iter().map(|&n| (ratio * n as f64).floor() as usize).collect();
    let mut order: Vec<usize> = (0..strata.len()).collect();
    let frac = |k: usize| ratio * strata[k] as f64 - alloc[k] as f64;
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut assigned: usize = alloc.iter().sum();
    for &k in &order {
        if assigned >= target {
            break;
        }
        if alloc[k] < strata[k] {
            alloc[k] += 1;
            assigned += 1;
        }
    }
    alloc
}

/// Row indices of each outcome stratum, each ordered by a seed-keyed hash
/// of the stop id so the assignment does not depend on row order.
pub(crate) fn keyed_strata(dataset: &Dataset, seed: u64, strata_of: impl Fn(usize) -> u8) -> Vec<Vec<usize>> {
    let mut strata: Vec<Vec<usize>> = Vec::new();
    for i in 0..dataset.len() {
        let s = strata_of(i) as usize;
        if strata.len() <= s {
            strata.resize_with(s + 1, Vec::new);
        }
        strata[s].push(i);
    }
    for s in &mut strata {
        s.sort_by_key(|&i| (seed::key_str(seed, &dataset.ids[i]), dataset.ids[i].clone(), i));
    }
    strata
}

/// Stratified holdout split, returning `(train, test)` index lists in
/// ascending row order.
pub fn split_indices(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("train ratio must lie in (0, 1), got {ratio}")));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyClass("dataset has no rows".into()));
    }
    let strata = keyed_strata(dataset, seed::derive(seed, "split", &[]), |i| dataset.labels[i].code());
    let sizes: Vec<usize> = strata.iter().map(Vec::len).collect();
    let alloc = allocate(&sizes, ratio);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, k) in strata.iter().zip(alloc) {
        train.extend_from_slice(&s[..k]);
        test.extend_from_slice(&s[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, ratio, seed)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}
