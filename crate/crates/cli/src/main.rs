//! `hjmvol` binary: ATM swaption pricing, Monte-Carlo validation, surface
//! calibration, and arbitrage scans over CSV/TOML inputs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hjmvol_cli::config::{parse_convention, parse_exclusion, RunConfig, CONFIG_ENV};
use hjmvol_cli::error::Result;
use hjmvol_cli::commands;

#[derive(Debug, Parser)]
#[command(
    name = "hjmvol",
    about = "ATM swaption pricing, validation, and forward-vol calibration in a one-factor forward-rate model",
    version
)]
struct Cli {
    /// TOML config file (default: the HJMVOL_CONFIG environment variable).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Discount curve CSV (overrides the config).
    #[arg(long, global = true)]
    curve: Option<PathBuf>,

    /// Spread curve CSV for the dual convention (overrides the config).
    #[arg(long, global = true)]
    spread: Option<PathBuf>,

    /// Quote CSV (overrides the config).
    #[arg(long, global = true)]
    quotes: Option<PathBuf>,

    /// Surface CSV (overrides the config).
    #[arg(long, global = true)]
    surface: Option<PathBuf>,

    /// Output directory for report files (overrides the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Monte-Carlo seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo path count (overrides the config).
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Discounting convention: single | dual (overrides the config).
    #[arg(long, global = true)]
    convention: Option<String>,

    /// Exclude a quoted expiry from calibration, as `expiry=<years>`
    /// (repeatable).
    #[arg(long, global = true, value_name = "expiry=<years>")]
    exclude: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form ATM prices and normal IVs for the configured grid.
    Price,
    /// Bootstrap the forward-vol surface from ATM quotes.
    Calibrate,
    /// Compare Monte-Carlo and closed-form IVs on the configured grid.
    McValidate,
    /// Report quotes that cannot be fit, with exclusions that clear them.
    ArbScan,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let config_path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let mut cfg = match config_path {
        Some(path) => RunConfig::from_file(&path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.curve {
        cfg.curve = Some(p.clone());
    }
    if let Some(p) = &cli.spread {
        cfg.spread = Some(p.clone());
    }
    if let Some(p) = &cli.quotes {
        cfg.quotes = Some(p.clone());
    }
    if let Some(p) = &cli.surface {
        cfg.surface = Some(p.clone());
    }
    if let Some(p) = &cli.out_dir {
        cfg.out_dir = Some(p.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.n_paths = paths;
    }
    if let Some(conv) = &cli.convention {
        cfg.convention = parse_convention(conv)?;
    }
    for spec in &cli.exclude {
        cfg.exclude_expiries.push(parse_exclusion(spec)?);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = build_config(cli)?;
    match cli.command {
        Command::Price => commands::cmd_price(&cfg),
        Command::Calibrate => commands::cmd_calibrate(&cfg),
        Command::McValidate => commands::cmd_mc_validate(&cfg),
        Command::ArbScan => commands::cmd_arb_scan(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
