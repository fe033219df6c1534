//! `logsob` — certify entropy-inequality machinery for a log-concave
//! potential from the command line.
//!
//! Exit status: 0 when all requested checks pass, 1 when a check ran and
//! failed, 2 on invalid usage, malformed configuration or a failed
//! precondition. Errors are single-line and machine-parsable on stderr,
//! prefixed with `error: `.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use logsob_cli::commands;
use logsob_cli::config::RunConfig;
use logsob_cli::output::OutputContext;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "logsob",
    version,
    about = "Certified numerics for entropy inequalities between exponential and Gaussian tails"
)]
struct Cli {
    /// JSON configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the growth-window hypothesis and write the report
    CheckH,
    /// Tabulate the potential, its derivative, its conjugate and the cost
    Transform,
    /// Normalize the measure and write a summary
    Normalize,
    /// Compute criterion constants with two-sided brackets
    Criteria,
    /// Scan test functions for the best entropy/energy constant
    LsiScan,
    /// Certified deviation bounds against Monte-Carlo frequencies
    Concentration,
    /// Verify the auxiliary inequalities the machinery rests on
    Lemmas,
    /// Write seeded draws from the normalized measure
    Sample,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let line = e
                .to_string()
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("error: {line}");
            return 2;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("error: requested checks failed");
            1
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    init_threads(&cfg);
    let ctx = OutputContext::new(&cfg)?;
    match cli.cmd {
        Cmd::CheckH => commands::check_h(&cfg, &ctx),
        Cmd::Transform => commands::transform(&cfg, &ctx),
        Cmd::Normalize => commands::normalize(&cfg, &ctx),
        Cmd::Criteria => commands::criteria(&cfg, &ctx),
        Cmd::LsiScan => commands::lsi_scan(&cfg, &ctx),
        Cmd::Concentration => commands::concentration(&cfg, &ctx),
        Cmd::Lemmas => commands::lemmas(&cfg, &ctx),
        Cmd::Sample => commands::sample(&cfg, &ctx),
    }
}

/// Worker-thread count: `LOGSOB_THREADS` beats the config field, which
/// beats available parallelism. Invalid values are ignored. Results never
/// depend on the choice; it only sets the degree of parallelism.
fn init_threads(cfg: &RunConfig) {
    let n = std::env::var("LOGSOB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |v| v.get()));
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}
