use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcd_bench::commands::{self, resolve_seed, SEED_ENV};
use mcd_bench::config::Config;
use mcd_bench::output::{render, Format};
use mcd_bench::{ablation, density_bench, real_bench, BenchError, Result};

#[derive(Parser)]
#[command(
    name = "mcd",
    version,
    about = "Conditional density estimation by marginal contrastive discrimination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset to CSV
    Simulate(Common),
    /// Fit an estimator on a CSV file and save it as JSON
    Train(Common),
    /// Evaluate a saved estimator on a CSV file
    Predict(Common),
    /// KL benchmark on synthetic density models
    BenchDensity(BenchArgs),
    /// NLL benchmark on a CSV dataset
    BenchReal(BenchArgs),
    /// KL over a grid of construction cells
    Ablation(BenchArgs),
}

#[derive(Args)]
struct Common {
    /// Configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; overrides MCD_SEED and the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Rescale predicted densities to integrate to one on the grid
    #[arg(long)]
    rescale: bool,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Run cells one at a time
    #[arg(long)]
    serial: bool,
    /// Record wall-clock time per cell
    #[arg(long)]
    timing: bool,
}

fn load(common: &Common) -> Result<(Config, u64)> {
    let cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let env = std::env::var(SEED_ENV).ok();
    let seed = resolve_seed(common.seed, env.as_deref(), &cfg)?;
    Ok((cfg, seed))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| BenchError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bench(args: &BenchArgs, section: &str) -> Result<(Config, u64)> {
    let (mut cfg, seed) = load(&args.common)?;
    if args.rescale {
        cfg.set(section, "rescale", "true");
    }
    if let Some(g) = args.grid_points {
        cfg.set(section, "grid_points", g.to_string());
    }
    if args.serial {
        cfg.set(section, "parallel", "false");
    }
    if args.timing {
        cfg.set(section, "timing", "true");
    }
    Ok((cfg, seed))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, seed) = load(&c)?;
            write_out(c.out.as_deref(), &commands::simulate(&cfg, seed)?)
        }
        Command::Train(c) => {
            let (cfg, seed) = load(&c)?;
            let model = commands::train(&cfg, seed)?;
            match c.out.as_deref() {
                Some(p) => commands::save_model(&model, p),
                None => write_out(None, &serde_json::to_string(&model)?),
            }
        }
        Command::Predict(c) => {
            let (cfg, _) = load(&c)?;
            write_out(c.out.as_deref(), &commands::predict(&cfg)?)
        }
        Command::BenchDensity(a) => {
            let (cfg, seed) = bench(&a, density_bench::SECTION)?;
            let reports = density_bench::run_from_config(&cfg, seed)?;
            write_out(a.common.out.as_deref(), &render(&reports, a.format)?)
        }
        Command::BenchReal(a) => {
            let (cfg, seed) = bench(&a, real_bench::SECTION)?;
            let reports = real_bench::run_from_config(&cfg, seed)?;
            write_out(a.common.out.as_deref(), &render(&reports, a.format)?)
        }
        Command::Ablation(a) => {
            let (cfg, seed) = bench(&a, ablation::SECTION)?;
            let reports = ablation::run_from_config(&cfg, seed)?;
            write_out(a.common.out.as_deref(), &render(&reports, a.format)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
