//! One-vs-rest evaluation: stratified k-fold cross-validation with
//! train-side resampling, and sensitivity/specificity reporting.

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use crate::data::BinaryData;
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, RandomForest};
use crate::par;
use crate::resample::ResampleMethod;
use crate::schema::{Dataset, FailureType};
use crate::seed;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[bool], pred: &[bool]) -> ConfusionMatrix {
        assert_eq!(truth.len(), pred.len());
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(pred) {
            match (t, p) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fn_ += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fp += 1,
            }
        }
        cm
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    /// Mean of sensitivity and specificity; an undefined side scores 0.
    pub fn balanced_accuracy(&self) -> f64 {
        let sens = if self.positives() > 0 { self.tp as f64 / self.positives() as f64 } else { 0.0 };
        let spec = if self.negatives() > 0 { self.tn as f64 / self.negatives() as f64 } else { 0.0 };
        (sens + spec) / 2.0
    }
}

/// `(sensitivity, specificity)`.
pub fn metrics(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    if cm.positives() == 0 {
        return Err(Error::UndefinedMetric("sensitivity"));
    }
    if cm.negatives() == 0 {
        return Err(Error::UndefinedMetric("specificity"));
    }
    Ok((cm.tp as f64 / cm.positives() as f64, cm.tn as f64 / cm.negatives() as f64))
}

/// Positive iff the stop failed with `t`; everything else is negative.
pub fn binarize(dataset: &Dataset, t: FailureType) -> BinaryData {
    dataset.binarize(t)
}

/// Splits rows into `k` stratified folds. Within each class rows are dealt
/// round-robin in `(key, index)` order, continuing the deal across classes,
/// so per-class and total fold sizes differ by at most one. Each fold lists
/// its rows in deal order.
pub fn stratified_folds(labels: &[bool], keys: &[u64], k: usize) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    assert_eq!(labels.len(), keys.len());
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [true, false] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < k {
            return Err(Error::EmptyClass(format!(
                "{} class has {} rows, fewer than {k} folds",
                if class { "positive" } else { "negative" },
                rows.len()
            )));
        }
        rows.sort_by_key(|&i| (keys[i], i));
        for i in rows {
            folds[next % k].push(i);
            next += 1;
        }
    }
    Ok(folds)
}

/// Train/test row indices of one fold, both in fold-key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fold assignment for type `t`. Keys hash the stop ids, so the plan (as a
/// set of ids) does not depend on row order.
pub fn cv_plan(dataset: &Dataset, t: FailureType, k: usize, seed: u64) -> Result<Vec<FoldPlan>> {
    let labels: Vec<bool> = dataset.labels.iter().map(|o| o.is(t)).collect();
    let fold_seed = seed::derive(seed, "folds", &[]);
    let keys: Vec<u64> = dataset.ids.iter().map(|id| seed::key_str(fold_seed, id)).collect();
    let folds = stratified_folds(&labels, &keys, k)?;
    Ok((0..k)
        .map(|f| {
            let mut train: Vec<usize> = (0..k).filter(|&g| g != f).flat_map(|g| folds[g].iter().copied()).collect();
            train.sort_by_key(|&i| (keys[i], i));
            FoldPlan { train, test: folds[f].clone() }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub sensitivity: f64,
    pub specificity: f64,
    pub train_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub failure_type: FailureType,
    pub method: ResampleMethod,
    pub folds: Vec<FoldResult>,
    pub mean_sensitivity: f64,
    pub mean_specificity: f64,
}

fn cell_seed(seed: u64, t: FailureType, method: ResampleMethod) -> u64 {
    seed::derive(seed, &format!("cv/{}/{}", t.as_str(), method.name()), &[])
}

/// Runs one fold: resamples the training side, fits, scores the untouched
/// test side. Returns the result and the ids of the training rows the
/// resampler kept (synthetic rows excluded).
pub fn run_fold(
    dataset: &Dataset,
    t: FailureType,
    plan: &FoldPlan,
    fold: usize,
    method: ResampleMethod,
    config: &ForestConfig,
    seed: u64,
) -> Result<(FoldResult, Vec<usize>)> {
    let cell = cell_seed(seed, t, method);
    let full = dataset.binarize(t);
    let train = method.apply(&full.select(&plan.train), seed::derive(cell, "resample", &[fold as u64]))?;
    let cfg = ForestConfig { seed: seed::derive(cell, "forest", &[fold as u64]), compute_oob: false, ..config.clone() };
    let forest = RandomForest::fit(&train, &cfg)?;
    let test = full.select(&plan.test);
    let pred = forest.predict_batch(&test.x)?;
    let confusion = ConfusionMatrix::from_predictions(&test.y, &pred);
    let (sensitivity, specificity) = metrics(&confusion)?;
    let kept = train.origin.iter().flatten().copied().collect();
    Ok((FoldResult { fold, confusion, sensitivity, specificity, train_rows: train.len() }, kept))
}

/// Stratified k-fold cross-validation of one (type, method) cell.
pub fn kfold_cv(
    dataset: &Dataset,
    t: FailureType,
    k: usize,
    method: ResampleMethod,
    config: &ForestConfig,
    seed: u64,
) -> Result<CvResult> {
    let plans = cv_plan(dataset, t, k, seed)?;
    let folds = par::try_map_range(k, |f| run_fold(dataset, t, &plans[f], f, method, config, seed).map(|r| r.0))?;
    let n = k as f64;
    Ok(CvResult {
        failure_type: t,
        method,
        mean_sensitivity: folds.iter().map(|f| f.sensitivity).sum::<f64>() / n,
        mean_specificity: folds.iter().map(|f| f.specificity).sum::<f64>() / n,
        folds,
    })
}

/// True when no test row of any fold is among the rows its own training
/// side retained after resampling.
pub fn leakage_free(
    dataset: &Dataset,
    t: FailureType,
    k: usize,
    method: ResampleMethod,
    config: &ForestConfig,
    seed: u64,
) -> Result<bool> {
    let plans = cv_plan(dataset, t, k, seed)?;
    for (f, plan) in plans.iter().enumerate() {
        let (_, kept) = run_fold(dataset, t, plan, f, method, config, seed)?;
        let test_ids: BTreeSet<&str> = plan.test.iter().map(|&i| dataset.ids[i].as_str()).collect();
        if kept.iter().any(|&i| test_ids.contains(dataset.ids[i].as_str())) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: ResampleMethod,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub cells: Vec<CvResult>,
}

impl EvalReport {
    /// Cross-validates every `(type, method)` pair, types outermost.
    pub fn run(
        dataset: &Dataset,
        types: &[FailureType],
        methods: &[ResampleMethod],
        k: usize,
        config: &ForestConfig,
        seed: u64,
    ) -> Result<EvalReport> {
        let pairs: Vec<(FailureType, ResampleMethod)> =
            types.iter().flat_map(|&t| methods.iter().map(move |&m| (t, m))).collect();
        let cells = par::try_map_range(pairs.len(), |c| kfold_cv(dataset, pairs[c].0, k, pairs[c].1, config, seed))?;
        Ok(EvalReport { cells })
    }

    /// Mean sensitivity and specificity per method over failure types, in
    /// first-seen method order.
    pub fn summary(&self) -> Vec<MethodSummary> {
        let mut out: Vec<(MethodSummary, usize)> = Vec::new();
        for c in &self.cells {
            match out.iter_mut().find(|(s, _)| s.method == c.method) {
                Some((s, n)) => {
                    s.sensitivity += c.mean_sensitivity;
                    s.specificity += c.mean_specificity;
                    *n += 1;
                }
                None => out.push((
                    MethodSummary { method: c.method, sensitivity: c.mean_sensitivity, specificity: c.mean_specificity },
                    1,
                )),
            }
        }
        out.into_iter()
            .map(|(mut s, n)| {
                s.sensitivity /= n as f64;
                s.specificity /= n as f64;
                s
            })
            .collect()
    }

    pub fn write_metrics_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["failure_type", "method", "fold", "sensitivity", "specificity"])?;
        for c in &self.cells {
            for f in &c.folds {
                csv.write_record([
                    c.failure_type.as_str().to_string(),
                    c.method.to_string(),
                    f.fold.to_string(),
                    format!("{:.6}", f.sensitivity),
                    format!("{:.6}", f.specificity),
                ])?;
            }
            csv.write_record([
                c.failure_type.as_str().to_string(),
                c.method.to_string(),
                "mean".to_string(),
                format!("{:.6}", c.mean_sensitivity),
                format!("{:.6}", c.mean_specificity),
            ])?;
        }
        csv.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// Aligned text table: one block per failure type, then the per-method
    /// averages.
    pub fn render_summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<6} {:<14} {:>11} {:>11}\n", "type", "method", "sensitivity", "specificity"));
        for c in &self.cells {
            s.push_str(&format!(
                "{:<6} {:<14} {:>11.2} {:>11.2}\n",
                c.failure_type.as_str(),
                c.method.to_string(),
                c.mean_sensitivity,
                c.mean_specificity
            ));
        }
        s.push_str("\naverage over failure types\n");
        s.push_str(&format!("{:<21} {:>11} {:>11}\n", "method", "sensitivity", "specificity"));
        for m in self.summary() {
            s.push_str(&format!("{:<21} {:>11.2} {:>11.2}\n", m.method.to_string(), m.sensitivity, m.specificity));
        }
        s
    }
}
