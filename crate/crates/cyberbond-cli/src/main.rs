//! `cyberbond`: fit loss distributions from an event CSV, simulate compound
//! loss paths, price trigger-linked bonds, and quote coupon rates.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use thiserror::Error;

mod commands;
mod config;

use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<cyberbond::event_data::DataError> for CliError {
    fn from(e: cyberbond::event_data::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "cyberbond",
    about = "Event-linked bond pricing: distribution fitting, loss simulation, trigger pricing, coupon quoting",
    version
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override (mandatory here or in the config for simulation
    /// commands).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Path-count override.
    #[arg(long, global = true)]
    paths: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit frequency/severity distributions to an event CSV and run
    /// goodness-of-fit tests.
    Fit {
        /// Event CSV (`date,loss_usd,category`); defaults to the config's
        /// fit.events_csv.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Comma-separated interval families to fit.
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
        /// Keep only events with this category tag.
        #[arg(long)]
        category: Option<String>,
    },
    /// Simulate losses and price the configured bond; writes pricing JSON
    /// and curve CSVs.
    Price,
    /// Quote the coupon rate.
    Coupon {
        /// `pl` (probability of loss) or `par` (Monte Carlo par yield).
        #[arg(long)]
        method: String,
    },
    /// Price sensitivities under common random numbers.
    Greeks {
        /// Also evaluate the confidence-box corner parameter sets.
        #[arg(long)]
        corners: bool,
    },
    /// Dump simulated paths as CSV for audit.
    Simulate,
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        if let Some(sim) = &mut config.simulation {
            sim.master_seed = Some(seed);
        }
    }
    if let Some(paths) = cli.paths {
        if let Some(sim) = &mut config.simulation {
            sim.n_paths = paths;
        }
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = effective_config(cli)?;
    match &cli.command {
        Command::Fit {
            events,
            families,
            category,
        } => {
            // The events flag stands in for a config fit section.
            if let Some(path) = events {
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "{} does not exist",
                        path.display()
                    )));
                }
                config.fit = Some(config::FitSection {
                    events_csv: path.clone(),
                    interval_families: None,
                    loss_families: None,
                    category: None,
                });
            }
            let fit = config.fit()?.clone();
            commands::cmd_fit(&config, &fit, families.as_deref(), category.as_deref())
        }
        Command::Price => commands::cmd_price(&config),
        Command::Coupon { method } => commands::cmd_coupon(&config, method),
        Command::Greeks { corners } => commands::cmd_greeks(&config, *corners),
        Command::Simulate => commands::cmd_simulate(&config),
    }
}

fn main() {
    // Die quietly on a closed pipe (e.g. `cyberbond fit ... | head`) instead
    // of panicking in println!.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
