//! End-to-end runs behind the command-line tool. Every artifact is a pure
//! function of the run config, the master seed and the input bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{metrics, ConfusionMatrix, EvalReport};
use crate::forest::{grid_search, write_forest, ForestConfig, RandomForest};
use crate::ingest::{self, write_dataset_csv};
use crate::resample::ResampleMethod;
use crate::rules::{render_text, write_csv, MinedRules, RuleMiner};
use crate::schema::{builtin_schema, hex, Dataset, FailureType, Outcome};
use crate::seed;
use crate::synthgen::{GeneratorConfig, Generator};

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Writes files under one output directory and remembers their digests.
pub struct ArtifactWriter {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>) -> Result<ArtifactWriter> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(ArtifactWriter { root, written: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&path, e))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Artifact name to SHA-256, in name order.
    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.written
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSummary {
    /// `"file"` or `"synthetic"`.
    pub source: String,
    pub path: Option<PathBuf>,
    pub file_sha256: Option<String>,
    pub n_stops: usize,
    pub dataset_hash: String,
    pub outcome_counts: BTreeMap<String, usize>,
}

/// Loads the dataset named by the config: `[input]` file, `[synth]`
/// generator, or the default generator when neither is given.
pub fn load_input(config: &RunConfig) -> Result<(Dataset, InputSummary)> {
    let (dataset, path, file_sha256) = match (&config.input, &config.synth) {
        (Some(input), _) => {
            let bytes = fs::read(&input.path).map_err(|e| Error::io(&input.path, e))?;
            let ds = ingest::load_dataset(&input.path, &builtin_schema()).map_err(|e| e.context("ingest"))?;
            (ds, Some(input.path.clone()), Some(sha256_hex(&bytes)))
        }
        (None, synth) => {
            let g = synth.clone().unwrap_or_else(|| GeneratorConfig { seed: config.seed, ..Default::default() });
            (Generator::new(&g)?.generate().map_err(|e| e.context("synth"))?, None, None)
        }
    };
    let mut outcome_counts = BTreeMap::new();
    outcome_counts.insert(Outcome::Success.as_str().to_string(), dataset.count(Outcome::Success));
    for t in FailureType::ALL {
        outcome_counts.insert(t.as_str().to_string(), dataset.count(Outcome::Failed(t)));
    }
    let summary = InputSummary {
        source: if path.is_some() { "file" } else { "synthetic" }.into(),
        path,
        file_sha256,
        n_stops: dataset.len(),
        dataset_hash: dataset.content_hash(),
        outcome_counts,
    };
    Ok((dataset, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub failure_type: FailureType,
    pub stage: String,
    pub reason: String,
}

/// Types with enough rows on both sides for `k`-fold CV; the others are
/// reported as skipped.
pub fn cv_ready_types(dataset: &Dataset, types: &[FailureType], k: usize, skipped: &mut Vec<Skipped>) -> Vec<FailureType> {
    let mut ready = Vec::new();
    for &t in types {
        let pos = dataset.count(Outcome::Failed(t));
        let neg = dataset.len() - pos;
        if pos < k || neg < k {
            let reason = format!("{pos} positive and {neg} negative stops, need {k} of each");
            warn!("skipping {} for evaluation: {reason}", t.as_str());
            skipped.push(Skipped { failure_type: t, stage: "evaluate".into(), reason });
        } else {
            ready.push(t);
        }
    }
    ready
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalModel {
    pub failure_type: FailureType,
    pub method: ResampleMethod,
    pub config: ForestConfig,
    pub train_rows: usize,
    pub test_rows: usize,
    pub oob_score: Option<f64>,
    pub holdout: ConfusionMatrix,
    pub holdout_sensitivity: Option<f64>,
    pub holdout_specificity: Option<f64>,
}

/// Holdout split, optional grid search, fit on the resampled training part
/// and score on the untouched test part.
pub fn fit_final_model(dataset: &Dataset, t: FailureType, config: &RunConfig) -> Result<(RandomForest, FinalModel)> {
    let stage_seed = seed::derive(config.seed, "final", &[]);
    let (train_idx, test_idx) = ingest::split_indices(dataset, 1.0 - config.holdout_ratio, stage_seed)?;
    let full = dataset.binarize(t);
    let train = full.select(&train_idx);
    let test = full.select(&test_idx);
    let type_seed = seed::derive(stage_seed, t.as_str(), &[]);
    let base = ForestConfig { seed: seed::derive(type_seed, "forest", &[]), ..config.forest.clone() };
    let forest_config = if config.grid_search {
        grid_search(&train, &config.grid, &base, config.final_method, config.cv_folds)?.best
    } else {
        base
    };
    let resampled = config.final_method.apply(&train, seed::derive(type_seed, "resample", &[]))?;
    let forest = RandomForest::fit(&resampled, &forest_config)?;
    let pred = forest.predict_batch(&test.x)?;
    let cm = ConfusionMatrix::from_predictions(&test.y, &pred);
    let m = metrics(&cm).ok();
    let summary = FinalModel {
        failure_type: t,
        method: config.final_method,
        config: forest_config,
        train_rows: resampled.len(),
        test_rows: test.len(),
        oob_score: forest.oob_score,
        holdout: cm,
        holdout_sensitivity: m.map(|m| m.0),
        holdout_specificity: m.map(|m| m.1),
    };
    Ok((forest, summary))
}

pub fn write_importances(out: &mut ArtifactWriter, name: &str, dataset: &Dataset, forest: &RandomForest) -> Result<()> {
    out.write_with(name, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["feature", "code", "importance", "rank"])?;
        for (j, imp, rank) in forest.ranked_importances() {
            let spec = dataset.schema.spec(j);
            w.write_record([spec.name.clone(), spec.code.clone(), format!("{imp:.6}"), rank.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    })
}

/// Longitude/latitude of every row each method keeps or creates, for
/// plotting how resampling reshapes the classes.
pub fn write_resampled_coords(
    out: &mut ArtifactWriter,
    name: &str,
    dataset: &Dataset,
    t: FailureType,
    methods: &[ResampleMethod],
    seed: u64,
) -> Result<()> {
    let (lon, lat) = match (dataset.schema.index_of("C1"), dataset.schema.index_of("C2")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::MissingColumn("Longitude/Latitude".into())),
    };
    let full = dataset.binarize(t);
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["longitude", "latitude", "method", "failed", "synthetic"])?;
        for &m in methods {
            let r = m.apply(&full, seed::derive(seed, m.name(), &[]))?;
            for i in 0..r.len() {
                let row = r.x.row(i);
                w.write_record([
                    row[lon].to_string(),
                    row[lat].to_string(),
                    m.name().to_string(),
                    (r.y[i] as u8).to_string(),
                    (r.origin[i].is_none() as u8).to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    }
    out.write(name, &buf)
}

pub fn write_rules(out: &mut ArtifactWriter, miner: &RuleMiner, mined: &MinedRules) -> Result<()> {
    let t = mined.failure_type.as_str();
    let ctx = miner.context();
    out.write_with(&format!("rules_{t}.csv"), |buf| write_csv(&mined.selection, &ctx, buf))?;
    let title = format!(
        "FAIL_{t}: |F| = {}, |C| = {}, s = {}, min_IR = {}, delta_IR = {}",
        mined.n_f, mined.n_c, mined.config.s, mined.config.min_ir, mined.config.delta_ir
    );
    out.write(&format!("rules_{t}.txt"), render_text(&mined.selection, &ctx, &title).as_bytes())
}

/// Mines every type with at least one failure; the rest are skipped.
pub fn mine_all(
    out: &mut ArtifactWriter,
    miner: &RuleMiner,
    config: &RunConfig,
    skipped: &mut Vec<Skipped>,
) -> Result<BTreeMap<FailureType, usize>> {
    let mut counts = BTreeMap::new();
    for &t in &config.types {
        if miner.n_failed(t) == 0 {
            warn!("skipping {} for rule mining: no failed stops", t.as_str());
            skipped.push(Skipped { failure_type: t, stage: "mine".into(), reason: "no failed stops".into() });
            continue;
        }
        let mined = miner.mine(t, &config.miner).map_err(|e| e.context(format!("mine {}", t.as_str())))?;
        info!("{}: {} rules selected", t.as_str(), mined.selection.len());
        counts.insert(t, mined.selection.len());
        write_rules(out, miner, &mined)?;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub stage_seeds: BTreeMap<String, u64>,
    pub input: InputSummary,
    pub skipped: Vec<Skipped>,
    pub final_models: Vec<FinalModel>,
    pub selected_rules: BTreeMap<FailureType, usize>,
    /// Artifact name to SHA-256; the manifest itself is not listed.
    pub artifacts: BTreeMap<String, String>,
}

fn stage_seeds(seed: u64) -> BTreeMap<String, u64> {
    ["cv", "final", "coords"].iter().map(|s| (s.to_string(), seed::derive(seed, s, &[]))).collect()
}

fn finish(out: &mut ArtifactWriter, mut manifest: Manifest) -> Result<Manifest> {
    manifest.artifacts = out.digests().clone();
    out.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}

fn new_manifest(command: &str, config: &RunConfig, input: InputSummary) -> Manifest {
    Manifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        stage_seeds: stage_seeds(config.seed),
        input,
        skipped: Vec::new(),
        final_models: Vec::new(),
        selected_rules: BTreeMap::new(),
        artifacts: BTreeMap::new(),
    }
}

fn evaluate_into(out: &mut ArtifactWriter, dataset: &Dataset, config: &RunConfig, manifest: &mut Manifest) -> Result<(Vec<FailureType>, EvalReport)> {
    let ready = cv_ready_types(dataset, &config.types, config.cv_folds, &mut manifest.skipped);
    let cv_seed = manifest.stage_seeds["cv"];
    info!("cross-validating {} types x {} methods", ready.len(), config.methods.len());
    let report = EvalReport::run(dataset, &ready, &config.methods, config.cv_folds, &config.forest, cv_seed)
        .map_err(|e| e.context("evaluate"))?;
    out.write_with("metrics.csv", |buf| report.write_metrics_csv(buf))?;
    Ok((ready, report))
}

/// Ingest, cross-validate every (type, method), fit and save the final
/// models, mine rules and write the run manifest.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    let (dataset, input) = load_input(config)?;
    let mut out = ArtifactWriter::new(&config.out)?;
    let mut manifest = new_manifest("pipeline", config, input);
    let (ready, report) = evaluate_into(&mut out, &dataset, config, &mut manifest)?;

    let schema_hash = dataset.schema.hash();
    for &t in &ready {
        let name = t.as_str();
        info!("fitting final model for {name}");
        let (forest, summary) = fit_final_model(&dataset, t, config).map_err(|e| e.context(format!("final model {name}")))?;
        out.write_with(&format!("models/{name}.forest"), |buf| write_forest(buf, &forest, &schema_hash))?;
        write_importances(&mut out, &format!("importance_{name}.csv"), &dataset, &forest)?;
        let coords_seed = seed::derive(manifest.stage_seeds["coords"], name, &[]);
        write_resampled_coords(&mut out, &format!("resampled_coords_{name}.csv"), &dataset, t, &config.methods, coords_seed)
            .map_err(|e| e.context(format!("resample {name}")))?;
        manifest.final_models.push(summary);
    }

    let miner = RuleMiner::new(&dataset).map_err(|e| e.context("mine"))?;
    manifest.selected_rules = mine_all(&mut out, &miner, config, &mut manifest.skipped)?;

    out.write("summary.txt", render_summary(&report, &manifest).as_bytes())?;
    finish(&mut out, manifest)
}

/// Cross-validation only: `metrics.csv`, `summary.txt`, `manifest.json`.
pub fn run_evaluate(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    let (dataset, input) = load_input(config)?;
    let mut out = ArtifactWriter::new(&config.out)?;
    let mut manifest = new_manifest("evaluate", config, input);
    let (_, report) = evaluate_into(&mut out, &dataset, config, &mut manifest)?;
    out.write("summary.txt", render_summary(&report, &manifest).as_bytes())?;
    finish(&mut out, manifest)
}

/// Rule reports only, no model training.
pub fn run_mine(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    let (dataset, input) = load_input(config)?;
    let mut out = ArtifactWriter::new(&config.out)?;
    let mut manifest = new_manifest("mine", config, input);
    let miner = RuleMiner::new(&dataset).map_err(|e| e.context("mine"))?;
    manifest.selected_rules = mine_all(&mut out, &miner, config, &mut manifest.skipped)?;
    finish(&mut out, manifest)
}

/// Aggregates a service-level CSV into one row per stop.
pub fn run_ingest(config: &RunConfig) -> Result<Manifest> {
    config.validate()?;
    if config.input.is_none() {
        return Err(Error::InvalidConfig("ingest needs an input file".into()));
    }
    let (dataset, input) = load_input(config)?;
    let mut out = ArtifactWriter::new(&config.out)?;
    out.write_with("stops.csv", |buf| write_dataset_csv(&dataset, buf))?;
    finish(&mut out, new_manifest("ingest", config, input))
}

/// Synthetic dataset plus the ground truth of its planted rules.
pub fn run_synth(generator: &GeneratorConfig, out_dir: &Path) -> Result<()> {
    let g = Generator::new(generator)?;
    let dataset = g.generate()?;
    let mut out = ArtifactWriter::new(out_dir)?;
    out.write_with("synthetic.csv", |buf| write_dataset_csv(&dataset, buf))?;
    out.write_json("ground_truth.json", &g.ground_truth()?)?;
    Ok(())
}

pub fn render_summary(report: &EvalReport, manifest: &Manifest) -> String {
    let mut s = format!(
        "stops: {} ({})\nseed: {}\n\ncross-validation ({} folds)\n",
        manifest.input.n_stops, manifest.input.source, manifest.config.seed, manifest.config.cv_folds
    );
    s.push_str(&report.render_summary());
    if !manifest.final_models.is_empty() {
        s.push_str("\nfinal models (holdout)\n");
        for m in &manifest.final_models {
            let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
            s.push_str(&format!(
                "{:<6} {:<14} trees={} depth={} {} sensitivity={} specificity={}\n",
                m.failure_type.as_str(),
                m.method.to_string(),
                m.config.n_estimators,
                m.config.max_depth,
                m.config.criterion,
                f(m.holdout_sensitivity),
                f(m.holdout_specificity)
            ));
        }
    }
    if !manifest.skipped.is_empty() {
        s.push_str("\nskipped\n");
        for k in &manifest.skipped {
            s.push_str(&format!("{:<6} {:<9} {}\n", k.failure_type.as_str(), k.stage, k.reason));
        }
    }
    s
}
