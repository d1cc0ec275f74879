use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hcrow_cli::config::{Format, LengthConvention, Overrides, RunConfig};
use hcrow_cli::{execute, CliError, Command};

/// Disorder-averaged transport and two-photon statistics of helical and
/// regular coupled-resonator waveguides.
#[derive(Parser, Debug)]
#[command(name = "hcrow", version)]
struct Args {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Master seed for the disorder ensemble.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    parallel: Option<usize>,
    /// Whether lengths count unit cells or rings.
    #[arg(long, global = true, value_enum)]
    length_convention: Option<LengthConvention>,
    #[command(subcommand)]
    command: Command,
}

fn run(args: Args) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cfg = cfg.apply(&Overrides {
        out: args.out,
        format: args.format,
        seed: args.seed,
        parallel: args.parallel,
        length_convention: args.length_convention,
    });
    execute(args.command, &cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hcrow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
