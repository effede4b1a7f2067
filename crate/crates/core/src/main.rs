use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use coop_relay_prd::optimizer::SweepAxis;
use coop_relay_prd::run::{configure_threads, execute, exit_code, load_config, write_report, Command, Overrides};
use coop_relay_prd::Error;

/// Progress rate density of cooperative relaying in Poisson networks.
#[derive(Debug, Parser)]
#[command(name = "coop-relay-prd", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// `key = value` config file or a previous run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory for the CSV and the manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// NC, IRC or RC.
    #[arg(long)]
    mode: Option<String>,
    /// Diversity order.
    #[arg(long = "M", short = 'M')]
    diversity: Option<usize>,
    /// Sweep axis: p, alpha or M.
    #[arg(long)]
    axis: Option<String>,
}

fn fail(err: &Error, code: i32) -> ExitCode {
    eprintln!("coop-relay-prd: {err}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(&e, 2);
    }
    let overrides = Overrides {
        seed: cli.seed,
        trials: cli.trials,
        mode: cli.mode,
        diversity: cli.diversity,
    };
    let setup = load_config(cli.config.as_deref(), &overrides)
        .and_then(|cfg| cli.axis.as_deref().map(str::parse::<SweepAxis>).transpose().map(|axis| (cfg, axis)));
    let (cfg, axis) = match setup {
        Ok(v) => v,
        Err(e) => return fail(&e, 2),
    };
    match execute(cli.command, &cfg, axis).and_then(|report| write_report(&report, &cli.out)) {
        Ok((csv, manifest)) => {
            println!("{}", csv.display());
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e, exit_code(&e)),
    }
}
