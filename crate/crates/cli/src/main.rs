//! `skw` — compute optimal secret-key rates for correlated sources with a
//! rate-limited public channel and secure link, and simulate the layered
//! binning scheme at finite blocklength.

mod cache;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skw_core::region::VaryAxis;

use commands::{execute, validate_config, Invocation, Overrides};

#[derive(Parser)]
#[command(
    name = "skw",
    version,
    about = "Secret-key rate workbench: region optimization and binning simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override both the optimizer and codec seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the public-channel rate.
    #[arg(long)]
    r1: Option<f64>,
    /// Override the secure-channel rate.
    #[arg(long)]
    r2: Option<f64>,
    /// Skip cache lookup and storage.
    #[arg(long)]
    no_cache: bool,
    /// Cache directory (default: $SKW_CACHE_DIR or .skw-cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which rate to vary.
    #[arg(long, value_parser = parse_vary)]
    vary: Option<VaryAxis>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Args, Clone)]
struct SimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the blocklength.
    #[arg(long)]
    n: Option<usize>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate at a fixed auxiliary pair, or the optimized rate.
    Point(CommonArgs),
    /// Exhaustive simplex-grid search (ground truth on small instances).
    Oracle(CommonArgs),
    /// Joint and separation curves along one varying rate.
    Sweep(SweepArgs),
    /// Monte Carlo disagreement probability plus a leakage estimate.
    Simulate(SimArgs),
    /// Leakage estimate only.
    Leakage(SimArgs),
    /// Parse and check a configuration file.
    ValidateConfig(CommonArgs),
}

fn parse_vary(s: &str) -> Result<VaryAxis, String> {
    match s {
        "r1" => Ok(VaryAxis::R1),
        "r2" => Ok(VaryAxis::R2),
        other => Err(format!("expected r1 or r2, got {}", other)),
    }
}

fn invocation(common: &CommonArgs, extra: Overrides) -> Invocation {
    Invocation {
        config_path: common.config.clone(),
        out: common.out.clone(),
        cache_dir: common.cache_dir.clone(),
        no_cache: common.no_cache,
        overrides: Overrides {
            seed: common.seed,
            r1: common.r1,
            r2: common.r2,
            ..extra
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, inv) = match &cli.command {
        Command::Point(c) => ("point", invocation(c, Overrides::default())),
        Command::Oracle(c) => ("oracle", invocation(c, Overrides::default())),
        Command::Sweep(s) => (
            "sweep",
            invocation(
                &s.common,
                Overrides {
                    vary: s.vary,
                    from: s.from,
                    to: s.to,
                    steps: s.steps,
                    ..Overrides::default()
                },
            ),
        ),
        Command::Simulate(s) => (
            "simulate",
            invocation(
                &s.common,
                Overrides { n: s.n, trials: s.trials, ..Overrides::default() },
            ),
        ),
        Command::Leakage(s) => (
            "leakage",
            invocation(
                &s.common,
                Overrides { n: s.n, trials: s.trials, ..Overrides::default() },
            ),
        ),
        Command::ValidateConfig(c) => ("validate-config", invocation(c, Overrides::default())),
    };

    let result = if name == "validate-config" {
        validate_config(&inv)
    } else {
        execute(name, &inv)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
