use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tfim::experiments::{self, Format, RunConfig};
use tfim::Error;

#[derive(Parser)]
#[command(name = "tfim", version, about = "Space-time representations of the transverse-field Ising model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment kind.
    Run(Options),
    /// Run a verification kind; exit 1 when any check fails.
    Verify(Options),
    /// Run a parameter sweep kind.
    Sweep(Options),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Options {
    /// TOML, or JSON when the extension is `.json`.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = tfim::rng::default_workers())]
    workers: usize,
    /// Overrides the output directory of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_) => Failure::Usage(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn execute(command: Command) -> Result<bool, Failure> {
    let (opts, wanted) = match command {
        Command::Run(o) => (o, None),
        Command::Verify(o) => (o, Some(true)),
        Command::Sweep(o) => (o, Some(false)),
    };
    let mut config = RunConfig::from_path(&opts.config)
        .map_err(|e| match e {
            Error::Io(_) => usage(anyhow::Error::from(e).context(format!("reading {}", opts.config.display()))),
            other => classify(other),
        })?;
    match wanted {
        Some(true) if !config.kind.is_verification() => {
            return Err(usage(anyhow::anyhow!("`verify` needs a verification kind, got {}", config.kind.name())));
        }
        Some(false) if !config.kind.is_sweep() => {
            return Err(usage(anyhow::anyhow!("`sweep` needs a sweep kind, got {}", config.kind.name())));
        }
        _ => {}
    }
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(dir) = opts.out {
        config.output.dir = dir;
    }
    if let Some(f) = opts.format {
        config.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    let outcome = experiments::run(&config, opts.workers).map_err(classify)?;
    let table = experiments::write_outputs(&outcome, &config.output.dir, config.output.format)
        .context("writing results")
        .map_err(Failure::Runtime)?;
    let summary = &outcome.summary;
    eprintln!("{} rows -> {}", summary.rows, table.display());
    if let Some(m) = summary.monotone {
        eprintln!("monotone in λ: {m}");
    }
    if let Some(c) = &summary.critical {
        eprintln!("λ_c/δ = {:.4} ± {:.4}", c.estimate, c.uncertainty);
    }
    if !outcome.passed() {
        eprintln!("failed checks:");
        for f in &summary.failures {
            eprintln!("  {f}");
        }
    }
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
