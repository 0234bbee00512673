#![allow(clippy::needless_range_loop, clippy::type_complexity)]

mod commands;
mod config;
mod output;
mod plot;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit statuses.
const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

/// Configuration or invocation problem; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "aniso", version, about = "Anisotropic Fourier-Lebesgue norms, inclusion checks and two-block network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; results go to `<out>/<subcommand>/`.
    #[arg(long, global = true, env = "ANISO_OUT")]
    out: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps and training jobs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 0 even when a quantity is flagged as unconverged.
    #[arg(long, global = true)]
    allow_unconverged: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fourier-Lebesgue, Barron, mixed Lebesgue and Bochner-Sobolev norm tables.
    Norms,
    /// Inclusion and embedding sweeps over a test-function family.
    Verify,
    /// Characteristic-function norms, boundary-layer bounds and Lebedev thresholds.
    Domains,
    /// Constant ledger and dimension sweep.
    Constants {
        /// Largest dimension in the sweep; overrides `constants.d_max`.
        #[arg(long)]
        d_max: Option<usize>,
    },
    /// One training run.
    Train,
    /// Single-block against two-block comparison at fixed parameter budgets.
    ReproducePaper,
    /// Error against width for nested networks.
    Rate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Verify => "verify",
            Command::Domains => "domains",
            Command::Constants { .. } => "constants",
            Command::Train => "train",
            Command::ReproducePaper => "reproduce-paper",
            Command::Rate => "rate",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let loaded = config::load(cli.config.as_deref())?;
    let cfg = &loaded.config;
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let root = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("aniso-out"));
    let mut out = output::RunOutput::create(&root, cli.command.name(), &loaded.text, seed)?;
    match cli.command {
        Command::Norms => commands::norms(cfg, seed, &mut out)?,
        Command::Verify => commands::verify(cfg, seed, &mut out)?,
        Command::Domains => commands::domains(cfg, &mut out)?,
        Command::Constants { d_max } => commands::constants(cfg, d_max, &mut out)?,
        Command::Train => commands::train(cfg, seed, &mut out)?,
        Command::ReproducePaper => commands::reproduce(cfg, seed, &mut out)?,
        Command::Rate => commands::rate(cfg, seed, &mut out)?,
    }
    out.finish()?;
    for c in out.checks() {
        println!("{}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("results in {}", out.dir.display());
    let unconverged = out.unconverged_items();
    for u in unconverged {
        eprintln!("unconverged: {u}");
    }
    Ok(unconverged.is_empty() || cli.allow_unconverged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: unconverged quantities (pass --allow-unconverged to accept)");
            ExitCode::from(EXIT_UNCONVERGED)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<aniso_core::Error>(), Some(aniso_core::Error::Usage(_) | aniso_core::Error::Parse(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_ERROR })
        }
    }
}
