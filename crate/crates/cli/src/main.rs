//! `rdts`: simulate, calibrate and image a Raman DTS thermography setup.
//!
//! Exit status is 0 on success, 2 for invalid input and 3 when the data
//! make a computation degenerate.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rdts", version, about = "Raman DTS thermography twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Ppm,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Environment {
    Room,
    Cryo,
}

#[derive(clap::Args, Debug)]
pub struct TraceArgs {
    /// Anti-Stokes trace of the measurement.
    #[arg(long = "anti-stokes")]
    pub anti_stokes: PathBuf,
    /// Stokes trace of the measurement.
    #[arg(long)]
    pub stokes: PathBuf,
    /// Anti-Stokes trace at the reference temperature.
    #[arg(long)]
    pub reference: PathBuf,
    /// Calibration constants written by `calibrate`.
    #[arg(long)]
    pub constants: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate reference, calibration and scenario traces.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Fit calibration constants from a manifest of calibration runs.
    Calibrate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Invert traces into a temperature profile.
    Invert {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        traces: TraceArgs,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Invert traces and build the board thermogram.
    Thermogram {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        traces: TraceArgs,
        /// Config scenario whose heater settings the summary compares against.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
        /// Write only this kind of output (profile and grid CSV, image, or summary).
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Fit or evaluate the heater temperature-rise model.
    Heatmodel {
        /// CSV of `current_a,delta_t_k` measurements.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Electrical resistance used to derive R_th from the fitted K, Ω.
        #[arg(long = "r-el")]
        r_el: Option<f64>,
        /// Environment whose resistance is used when `--r-el` is absent.
        #[arg(long, value_enum, default_value = "room")]
        environment: Environment,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Simulate, calibrate and image every scenario of a config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate { config, seed, out_dir } => commands::simulate(&config, seed, out_dir),
        Command::Calibrate {
            manifest,
            out_dir,
            format,
        } => commands::calibrate(&manifest, out_dir, format),
        Command::Invert {
            config,
            traces,
            out_dir,
        } => commands::invert(&config, &traces, out_dir),
        Command::Thermogram {
            config,
            traces,
            scenario,
            out_dir,
            format,
        } => commands::thermogram(&config, &traces, scenario.as_deref(), out_dir, format),
        Command::Heatmodel {
            data,
            r_el,
            environment,
            format,
        } => commands::heatmodel(data.as_deref(), r_el, environment, format),
        Command::Pipeline { config, seed, out_dir } => commands::pipeline(&config, seed, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_degenerate() { 3 } else { 2 })
        }
    }
}
