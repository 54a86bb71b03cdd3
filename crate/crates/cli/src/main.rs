//! `kle`: runs the Karhunen-Loève experiments and writes CSV tables plus a
//! JSON manifest into an output directory.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::CliError;

#[derive(Debug, Parser)]
#[command(name = "kle", version, about = "Karhunen-Loève expansion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// 1D Fredholm spectrum against the closed-form oracle.
    #[command(name = "spectrum-1d")]
    Spectrum1d(commands::spectrum1d::Args),
    /// Sample-based (SVD) spectra and coefficient normality study.
    #[command(name = "svd-study")]
    SvdStudy(commands::svd_study::Args),
    /// Spectra on a 2D triangle mesh.
    #[command(name = "mesh2d")]
    Mesh2d(commands::mesh2d::Args),
    /// Euclidean vs shortest-interior-path kernels on a voxelized torus.
    #[command(name = "torus3d")]
    Torus3d(commands::torus3d::Args),
    /// Runs an experiment described by a JSON config file.
    Run {
        /// JSON object with an "experiment" key plus that command's flags.
        #[arg(long)]
        config: std::path::PathBuf,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Spectrum1d(args) => commands::spectrum1d::run(&args),
        Command::SvdStudy(args) => commands::svd_study::run(&args),
        Command::Mesh2d(args) => commands::mesh2d::run(&args),
        Command::Torus3d(args) => commands::torus3d::run(&args),
        Command::Run { config } => {
            let argv = config::config_to_argv(&config)?;
            let cli = Cli::try_parse_from(argv).map_err(|e| CliError::usage(e.to_string()))?;
            if matches!(cli.command, Command::Run { .. }) {
                return Err(CliError::usage("a config file cannot run another config"));
            }
            dispatch(cli.command)
        }
    }
}

fn setup_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("KLE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("KLE_THREADS must be a positive integer, got {value:?}")))?;
    kle_core::configure_threads(n).map_err(CliError::from)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version and 2 for usage errors
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match setup_threads().and_then(|_| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
