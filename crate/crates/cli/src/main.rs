//! `fermon` command-line driver.

mod config;
mod error;
mod persist;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use fermon::output::format_float;
use fermon::validation::oracle_suite;
use serde_json::json;

use config::{Command, Overrides, RunConfig};
use error::CliError;
use persist::{config_hash, read_manifest, sha256_hex, write_atomic, write_manifest, ErrorRecord, Manifest};

#[derive(Parser)]
#[command(name = "fermon", version, about = "Monitored free-fermion circuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Steady-state mutual information over a parameter grid.
    PhaseDiagram(RunArgs),
    /// Domain-wall run with a reference chain; records the contour every step.
    DomainWall(RunArgs),
    /// Four-stage braiding protocol on a T-junction.
    Braid(RunArgs),
    /// Compares the covariance engine with the dense simulator.
    OracleValidate(OracleArgs),
    /// Re-runs the configuration stored in a manifest and checks the outputs.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (fig1b, fig2, fig3, fig4, fig4-walls, s1, s2, s3, s3-unitary).
    #[arg(long)]
    preset: Option<String>,
    /// Master seed; overrides the preset and the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (outputs do not depend on it).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print gate counts and an estimated runtime without simulating.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Random gates per run.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 1000)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write `oracle.csv` and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Manifest of the run to replay.
    manifest: PathBuf,
    /// Output directory (default: `replay/` next to the manifest).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

const ORACLE_TOL: f64 = 1e-8;

fn pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs `config`, writes its artifacts and manifest, and returns the manifest.
fn run_config(config: &RunConfig) -> Result<Manifest, CliError> {
    let started = unix_now();
    let clock = Instant::now();
    let result = pool(config.workers)?.install(|| run::execute(config));
    let mut manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command().name().to_string(),
        config_hash: config_hash(config),
        master_seed: config.seed,
        workers: config.workers,
        config: Some(config.clone()),
        wall_clock_seconds: 0.0,
        started_unix_seconds: started,
        outputs: BTreeMap::new(),
        summary: json!(null),
        error: None,
    };
    let outcome = result.and_then(|artifacts| {
        for (name, contents) in &artifacts.files {
            write_atomic(&config.out.join(name), contents.as_bytes())?;
            manifest.outputs.insert(name.clone(), sha256_hex(contents.as_bytes()));
        }
        manifest.summary = artifacts.summary;
        Ok(())
    });
    manifest.wall_clock_seconds = clock.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        manifest.error = Some(ErrorRecord::from(e));
    }
    write_manifest(&config.out, &manifest)?;
    outcome.map(|_| manifest)
}

fn experiment(command: Command, args: RunArgs) -> Result<(), CliError> {
    let file = args.config.as_deref().map(config::read_file).transpose()?;
    let flags = Overrides {
        preset: args.preset,
        seed: args.seed,
        workers: args.workers,
        out: args.out,
    };
    let config = config::resolve(command, file, &flags)?;
    if args.dry_run {
        let report = run::dry_run(&config)?;
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return Ok(());
    }
    let manifest = run_config(&config)?;
    println!(
        "{} finished in {:.1} s; outputs in {}",
        manifest.command,
        manifest.wall_clock_seconds,
        config.out.display()
    );
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let started = unix_now();
    let clock = Instant::now();
    let runs = pool(args.workers.unwrap_or(1))?.install(|| oracle_suite(args.steps, args.seed, ORACLE_TOL))?;
    let mut table = String::from("family,majoranas,steps,covariance,entropy,probability\n");
    let mut failures = Vec::new();
    for d in &runs {
        let family = serde_json::to_value(d.family).expect("family serializes");
        let family = family.as_str().unwrap_or_default().to_string();
        let pass = d.max() <= ORACLE_TOL && d.steps == args.steps;
        println!(
            "{} {family:<26} L={:<2} steps={:<4} max dev {:.2e}",
            if pass { "PASS" } else { "FAIL" },
            d.majoranas,
            d.steps,
            d.max()
        );
        if !pass {
            failures.push(format!("{family} L={}", d.majoranas));
        }
        table.push_str(&format!(
            "{family},{},{},{},{},{}\n",
            d.majoranas,
            d.steps,
            format_float(d.covariance),
            format_float(d.entropy),
            format_float(d.probability)
        ));
    }
    let outcome = if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("oracle deviations above {ORACLE_TOL:e}: {}", failures.join(", "))))
    };
    if let Some(out) = &args.out {
        write_atomic(&out.join("oracle.csv"), table.as_bytes())?;
        let manifest = Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: "oracle-validate".into(),
            config_hash: sha256_hex(format!("steps={} seed={}", args.steps, args.seed).as_bytes()),
            master_seed: args.seed,
            workers: args.workers.unwrap_or(1),
            config: None,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
            started_unix_seconds: started,
            outputs: BTreeMap::from([("oracle.csv".to_string(), sha256_hex(table.as_bytes()))]),
            summary: json!({ "runs": runs.len(), "tolerance": ORACLE_TOL }),
            error: outcome.as_ref().err().map(ErrorRecord::from),
        };
        write_manifest(out, &manifest)?;
    }
    outcome
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let original = read_manifest(&args.manifest)?;
    let Some(mut config) = original.config.clone() else {
        return Err(CliError::Config(format!("{} has no run config to replay", args.manifest.display())));
    };
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    config.out = args.out.unwrap_or_else(|| base.join("replay"));
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if config_hash(&config) != original.config_hash {
        return Err(CliError::Check("manifest config does not match its recorded hash".into()));
    }
    let manifest = run_config(&config)?;
    if manifest.version != original.version {
        eprintln!("note: replaying a {} run with version {}", original.version, manifest.version);
    }
    let mismatched: Vec<&String> = original
        .outputs
        .iter()
        .filter(|(name, hash)| manifest.outputs.get(*name) != Some(hash))
        .map(|(name, _)| name)
        .collect();
    if mismatched.is_empty() {
        println!("replay reproduced {} output file(s) byte for byte", original.outputs.len());
        Ok(())
    } else {
        Err(CliError::Check(format!("replayed outputs differ: {mismatched:?}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Sub::PhaseDiagram(a) => experiment(Command::PhaseDiagram, a),
        Sub::DomainWall(a) => experiment(Command::DomainWall, a),
        Sub::Braid(a) => experiment(Command::Braid, a),
        Sub::OracleValidate(a) => oracle(a),
        Sub::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
