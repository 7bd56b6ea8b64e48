use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pxc_cli::config::parse_axes;
use pxc_cli::{cmd_calibrate, cmd_compare, cmd_deltarho, cmd_oracle, cmd_scf, CliError, Options, RunConfig};

#[derive(Parser)]
#[command(name = "pxc", version, about = "Photon-exchange density functional tools")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Continue past a failed Poisson boundary check.
    #[arg(long, global = true)]
    force: bool,
    /// Seed for the oracle start vector.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Self-consistent Kohn-Sham run.
    Scf,
    /// Exact one-electron Pauli-Fierz ground state.
    Oracle,
    /// Calibrate eta_c against a reference density difference.
    Calibrate,
    /// I metric between two density differences.
    Compare {
        a_in: PathBuf,
        a_out: PathBuf,
        b_in: PathBuf,
        b_out: PathBuf,
        /// Comma-separated cut axes.
        #[arg(long, default_value = "z")]
        cuts: String,
    },
    /// Density difference of an in/out pair.
    Deltarho {
        rho_in: PathBuf,
        rho_out: PathBuf,
        #[arg(long, default_value = "z")]
        cuts: String,
    },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("this command needs --config <file>".into()))?;
    RunConfig::from_file(path)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let opts = Options { out_dir: cli.out_dir.clone(), force: cli.force, seed: cli.seed };
    match &cli.command {
        Command::Scf => cmd_scf(&load(cli)?, &opts).map(drop),
        Command::Oracle => cmd_oracle(&load(cli)?, &opts).map(drop),
        Command::Calibrate => cmd_calibrate(&load(cli)?, &opts).map(drop),
        Command::Compare { a_in, a_out, b_in, b_out, cuts } => {
            cmd_compare((a_in, a_out), (b_in, b_out), &parse_axes(cuts)?, &opts).map(drop)
        }
        Command::Deltarho { rho_in, rho_out, cuts } => cmd_deltarho(rho_in, rho_out, &parse_axes(cuts)?, &opts).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
