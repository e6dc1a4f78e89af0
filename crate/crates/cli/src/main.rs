mod config;
mod error;
mod output;
mod scenarios;
mod schema;

use billiard_core::exec::Executor;
use clap::{Parser, Subcommand, ValueEnum};
use config::{ExperimentConfig, Overrides};
use error::CliError;
use output::{file_sha256, sha256_hex, Artifacts};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Stochastic billiard experiments: simulation, couplings, rate certificates
/// and their Monte-Carlo verification.
#[derive(Parser)]
#[command(name = "billiard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment config (TOML, or JSON when the extension is .json).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaKind {
    Config,
    Certificate,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario and write its artifacts.
    Run(ConfigArgs),
    /// Check a config without running it.
    ValidateConfig(ConfigArgs),
    /// Print a JSON schema.
    Schema {
        #[arg(value_enum, default_value = "config")]
        which: SchemaKind,
    },
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    scenario: config::Scenario,
    seed: u64,
    workers: usize,
    parallel_feature: bool,
    config_sha256: String,
    config: &'a ExperimentConfig,
    outputs: Vec<OutputEntry>,
    verdict_pass: bool,
    wall_time_s: f64,
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply(&Overrides {
        seed: args.seed,
        workers: args.workers,
        out: args.out.clone(),
    });
    Ok(cfg)
}

fn run(args: &ConfigArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load(args)?;
    let (body, law) = cfg.validate()?;
    let seed = cfg.seed()?;
    let workers = cfg.workers.unwrap_or(0);
    let ctx = scenarios::Context {
        cfg: &cfg,
        body: &body,
        law: &law,
        seed,
        exec: Executor::with_workers(workers),
    };
    let mut out = Artifacts::new(cfg.out_dir());
    let pass = scenarios::run(&ctx, &mut out)?;
    let outputs = out
        .written
        .iter()
        .map(|p| {
            Ok(OutputEntry {
                file: p
                    .file_name()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
                sha256: file_sha256(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let canonical = serde_json::to_vec(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let manifest = Manifest {
        tool: "billiard",
        version: env!("CARGO_PKG_VERSION"),
        core_version: billiard_core::VERSION,
        scenario: cfg.scenario,
        seed,
        workers,
        parallel_feature: cfg!(feature = "parallel"),
        config_sha256: sha256_hex(&canonical),
        config: &cfg,
        outputs,
        verdict_pass: pass,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{:?} verdict failed; see {}",
            cfg.scenario,
            out.dir().display()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::ValidateConfig(args) => load(args).and_then(|cfg| {
            cfg.validate()?;
            println!("config ok: scenario {:?}", cfg.scenario);
            Ok(())
        }),
        Command::Schema { which } => {
            let value = match which {
                SchemaKind::Config => schema::config(),
                SchemaKind::Certificate => schema::certificate(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&value).expect("schema serializes")
            );
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
