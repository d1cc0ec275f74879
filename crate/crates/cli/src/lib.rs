//! Command-line front end: configuration, table construction and output.
//!
//! The binary is a thin wrapper around [`execute`]; tests drive the same
//! entry point.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::Subcommand;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{write_outputs, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<hcrow::Error> for CliError {
    fn from(e: hcrow::Error) -> Self {
        use hcrow::Error::*;
        match e {
            InvalidParameter { .. } | SizeMismatch { .. } | OffGrid { .. } => CliError::Config(e.to_string()),
            SingularSystem { .. } | ZeroNorm { .. } | ExclusionBudget { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Band structure and group velocities of the clean lattice.
    Band,
    /// Disorder-averaged transmission, reflection and intensity profile.
    Transmit,
    /// Group-delay statistics and histogram at the band centre.
    Delay,
    /// Hong-Ou-Mandel coincidence curves and the length sweep.
    Hom,
    /// N00N coincidence, purity, histogram and entanglement entropy.
    Noon,
    /// Band-centre transmission against disorder strength.
    SweepDisorder,
    /// Minimum HOM coincidence against lattice length.
    SweepLength,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Band => "band",
            Command::Transmit => "transmit",
            Command::Delay => "delay",
            Command::Hom => "hom",
            Command::Noon => "noon",
            Command::SweepDisorder => "sweep-disorder",
            Command::SweepLength => "sweep-length",
        }
    }
}

/// Computes the tables for `cmd` without touching the file system.
pub fn compute(cmd: Command, cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    cfg.validate()?;
    commands::run(cmd, cfg)
}

/// Run manifest. Data-affecting settings sit under `config`; `execution`
/// holds the settings that cannot change the numbers.
pub fn manifest(cmd: Command, cfg: &RunConfig, tables: &[Table]) -> Result<serde_json::Value, CliError> {
    let mut config = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    let obj = config.as_object_mut().expect("config serializes to a table");
    let parallel = obj.remove("parallel");
    let out = obj.remove("out");
    let files: Vec<String> = tables
        .iter()
        .map(|t| format!("{}.{}", t.name, cfg.format.extension()))
        .collect();
    let lattices = cfg
        .lattices
        .iter()
        .map(|&k| {
            let spec = cfg.lattice_spec(k)?;
            Ok(json!({ "kind": k.name(), "num_cells": spec.num_cells, "num_sites": spec.dim() }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(json!({
        "program": "hcrow",
        "version": VERSION,
        "command": cmd.name(),
        "seed": cfg.seed,
        "config": config,
        "lattices": lattices,
        "files": files,
        "execution": { "parallel": parallel, "out": out },
    }))
}

/// Computes, then writes every table and the manifest into `cfg.out`.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let tables = compute(cmd, cfg)?;
    let manifest = manifest(cmd, cfg, &tables)?;
    write_outputs(&cfg.out, cfg.format, &tables, &manifest)
}
