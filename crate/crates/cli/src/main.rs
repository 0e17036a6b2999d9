//! `mmimo` command line: run throughput campaigns from a config file, probe
//! channel hardening, solve one power-control instance from a terms file,
//! and print NR power-allocation recomputation counts.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/solver error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmimo::{NrNumerology, Objective};

#[derive(Parser)]
#[command(name = "mmimo", version, about = "Massive MIMO downlink power-allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaigns in a config file and write CDF + summary CSVs.
    Run {
        /// Campaign config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the campaign seed for every scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count (defaults to the number of cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Estimate the channel-hardening coefficient per antenna count.
    Hardening {
        /// Channel model: rayleigh | keyhole.
        #[arg(long, default_value = "rayleigh")]
        model: String,
        /// Keyhole count (keyhole model only).
        #[arg(long, default_value_t = 1)]
        keyholes: usize,
        /// Antenna counts, comma separated.
        #[arg(long = "M", value_delimiter = ',', default_value = "6,50,100")]
        antennas: Vec<usize>,
        /// Monte Carlo samples per estimate.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one power-control instance from a terms file and print the
    /// allocation, SINRs, and rates.
    Solve {
        /// CSV-style terms file: `rho_d,<v>`, `a,<v..>`, K rows `b,<v..>`.
        #[arg(long)]
        terms: PathBuf,
        /// sum_rate | max_min.
        #[arg(long)]
        objective: String,
    },
    /// Print how often an instantaneous-CSI design recomputes its power
    /// allocation for an NR-style numerology.
    Overhead {
        #[arg(long = "bandwidth-hz", default_value_t = 100e6)]
        bandwidth_hz: f64,
        #[arg(long = "spacing-hz", default_value_t = 15e3)]
        spacing_hz: f64,
        /// Subcarriers per frequency granularity interval.
        #[arg(long, default_value_t = 24)]
        subcarriers: u32,
        /// TTIs per frame.
        #[arg(long, default_value_t = 10)]
        ttis: u32,
        #[arg(long, default_value_t = 10)]
        frames: u32,
    },
}

fn dispatch(cli: Cli) -> Result<(), commands::CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| commands::CliError::Runtime(format!("thread pool: {e}")))?;
            }
            commands::cmd_run(&config, &out, seed)
        }
        Command::Hardening {
            model,
            keyholes,
            antennas,
            samples,
            seed,
            out,
        } => commands::cmd_hardening(&model, keyholes, &antennas, samples, seed, out.as_deref()),
        Command::Solve { terms, objective } => {
            let objective = match objective.as_str() {
                "sum_rate" => Objective::SumRate,
                "max_min" => Objective::MaxMin,
                other => {
                    return Err(commands::CliError::Config(format!(
                        "--objective must be `sum_rate` or `max_min`, got `{other}`"
                    )));
                }
            };
            commands::cmd_solve(&terms, objective)
        }
        Command::Overhead {
            bandwidth_hz,
            spacing_hz,
            subcarriers,
            ttis,
            frames,
        } => commands::cmd_overhead(&NrNumerology {
            bandwidth_hz,
            subcarrier_spacing_hz: spacing_hz,
            subcarriers_per_granularity: subcarriers,
            ttis_per_frame: ttis,
            frames,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
