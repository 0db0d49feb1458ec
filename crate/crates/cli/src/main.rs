mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use config::ExperimentConfig;

/// Experiment runner for the skew-product laboratory. Each subcommand writes
/// `<out>/<command>.json` and, where relevant, CSV tables next to it.
#[derive(Parser)]
#[command(name = "skewlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `outputs.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel estimators.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Structural checks on the skew-product and the H1 inequality.
    Validate,
    /// Exact Gibbs state and pressure of the base potential.
    Gibbs,
    /// Separated-set pressure table and slope.
    Pressure,
    /// Intertwining residuals of the semi-conjugacy.
    Semiconj,
    /// Mostly-contracting condition, set B and the lifted equilibrium state.
    Equilibrium,
    /// Potential and dynamics stability ladders.
    Stability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Gibbs => "gibbs",
            Command::Pressure => "pressure",
            Command::Semiconj => "semiconj",
            Command::Equilibrium => "equilibrium",
            Command::Stability => "stability",
        }
    }
}

/// Serializes with sorted keys and attaches the SHA-256 of that text.
fn finish_report(body: Value) -> Result<Value> {
    let canonical = serde_json::to_string(&body)?;
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    let mut report = body;
    report["content_hash"] = json!(hash);
    Ok(report)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.dir = out.clone();
    }
    let resolved = cfg.resolve()?;
    let outcome = match cli.command {
        Command::Validate => commands::validate(&cfg, &resolved),
        Command::Gibbs => commands::gibbs(&cfg, &resolved),
        Command::Pressure => commands::pressure(&cfg, &resolved),
        Command::Semiconj => commands::semiconj(&cfg, &resolved),
        Command::Equilibrium => commands::equilibrium(&cfg, &resolved),
        Command::Stability => commands::stability(&cfg, &resolved),
    }?;
    let name = cli.command.name();
    let report = finish_report(json!({
        "command": name,
        "config": serde_json::to_value(&cfg)?,
        "passed": outcome.passed,
        "result": outcome.result,
        "version": env!("CARGO_PKG_VERSION"),
    }))?;
    let dir = &cfg.outputs.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let text = serde_json::to_string_pretty(&report)?;
    write(&dir.join(format!("{name}.json")), &text)?;
    for (file, csv) in &outcome.tables {
        write(&dir.join(file), csv)?;
    }
    let summary = json!({
        "command": name,
        "passed": outcome.passed,
        "report": dir.join(format!("{name}.json")),
        "content_hash": report["content_hash"],
    });
    let _ = writeln!(std::io::stdout(), "{summary}");
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let chain: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let error = json!({
                "command": cli.command.name(),
                "error": e.root_cause().to_string(),
                "context": chain,
                "message": format!("{e:#}"),
            });
            let _ = writeln!(std::io::stdout(), "{error}");
            ExitCode::from(2)
        }
    }
}
