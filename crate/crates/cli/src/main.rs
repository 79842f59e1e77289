//! `msrr`: config-driven front end to the resonator models.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use msrr_core::circuit::PortMode;

use crate::commands::Overrides;
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(name = "msrr", version, about = "Split-ring resonator design and trace analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Sampling grid override, `nr,nphi,nz`.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    /// Drive mode override.
    #[arg(long, global = true)]
    ports: Option<PortMode>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// S11 spectrum, field map and homogeneity report.
    Simulate,
    /// One-parameter geometry sweep.
    Sweep,
    /// Simplex geometry optimization.
    Optimize,
    /// Damped Rabi oscillation fit.
    FitRabi,
    /// Lorentzian S11 dip fit.
    FitS11,
    /// Exponential build-up or decay fit.
    FitRingdown,
    /// Magnetometer sensitivity budget.
    Budget,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
            Command::FitRabi => "fit-rabi",
            Command::FitS11 => "fit-s11",
            Command::FitRingdown => "fit-ringdown",
            Command::Budget => "budget",
        }
    }
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected three comma-separated counts".to_string())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config {
        key: Some("--config".into()),
        line: None,
        message: "no configuration file given".into(),
    })?;
    let mut cfg = LoadedConfig::load(path)?;
    let overrides = Overrides {
        grid: cli.grid,
        ports: cli.ports,
    };
    overrides.apply(&mut cfg.config);
    let mut out = OutputDir::create(&cli.out, cli.quiet)?;
    let cmd = cli.command;
    let t0 = Instant::now();
    match cmd {
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Sweep => commands::run_sweep(&cfg, &mut out, cli.quiet),
        Command::Optimize => commands::optimize(&cfg, &mut out),
        Command::FitRabi => commands::fit_rabi_cmd(&cfg, &mut out),
        Command::FitS11 => commands::fit_s11_cmd(&cfg, &mut out),
        Command::FitRingdown => commands::fit_ringdown_cmd(&cfg, &mut out),
        Command::Budget => commands::budget(&cfg, &mut out),
    }?;
    out.record("total", t0.elapsed().as_secs_f64());
    out.finish(cmd.name(), &cfg.path, &cfg.text, overrides.describe())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
