use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svcfail_core::config::{InputConfig, RunConfig};
use svcfail_core::pipeline;
use svcfail_core::resample::ResampleMethod;
use svcfail_core::synthgen::GeneratorConfig;
use svcfail_core::{Error, ErrorKind, FailureType};

/// Predict and explain service failures in pickup/delivery stop data.
#[derive(Parser, Debug)]
#[command(name = "svcfail", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config (a generator config for `synth`, a run config otherwise).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated failure types, e.g. NAH,SR.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    types: Option<Vec<String>>,
    /// Comma-separated resampling methods: none, smote, nearmiss3, random-under.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Service-level CSV to read instead of the configured input.
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic stop dataset and its ground-truth manifest.
    Synth {
        /// Number of stops, overriding the config.
        #[arg(long)]
        n_stops: Option<usize>,
    },
    /// Deduplicate, encode and aggregate a service-level CSV into stops.
    Ingest,
    /// Full run: evaluation, final models, importances and rules.
    Pipeline,
    /// Association rules only.
    Mine,
    /// Cross-validated sensitivity and specificity only.
    Evaluate,
}

fn run_config(common: &Common) -> Result<RunConfig, Error> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
        if let Some(synth) = config.synth.as_mut() {
            synth.seed = seed;
        }
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(types) = &common.types {
        config.types = types.iter().map(|t| t.parse()).collect::<Result<Vec<FailureType>, _>>()?;
    }
    if let Some(methods) = &common.methods {
        config.methods = methods.iter().map(|m| m.parse()).collect::<Result<Vec<ResampleMethod>, _>>()?;
    }
    if let Some(input) = &common.input {
        config.input = Some(InputConfig { path: input.clone() });
        config.synth = None;
    }
    config.validate()?;
    Ok(config)
}

fn synth(common: &Common, n_stops: Option<usize>) -> Result<(), Error> {
    let mut config = match &common.config {
        Some(path) => GeneratorConfig::load(path)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = n_stops {
        config.n_stops = n;
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    pipeline::run_synth(&config, &out)?;
    println!("wrote {}", out.join("synthetic.csv").display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Error> {
    let manifest = match &cli.command {
        Command::Synth { n_stops } => return synth(&cli.common, *n_stops),
        Command::Ingest => pipeline::run_ingest(&run_config(&cli.common)?)?,
        Command::Pipeline => pipeline::run_pipeline(&run_config(&cli.common)?)?,
        Command::Mine => pipeline::run_mine(&run_config(&cli.common)?)?,
        Command::Evaluate => pipeline::run_evaluate(&run_config(&cli.common)?)?,
    };
    for s in &manifest.skipped {
        eprintln!("warning: skipped {} ({}): {}", s.failure_type.as_str(), s.stage, s.reason);
    }
    println!("wrote {} artifacts to {}", manifest.artifacts.len() + 1, manifest.config.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Internal => 3,
            })
        }
        Err(_) => ExitCode::from(3),
    }
}
