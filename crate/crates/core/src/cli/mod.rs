//! `guardline` command line.
//!
//! Exit status: 0 on success, 1 when a run fails or a file does not
//! validate, 2 on bad usage.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use guardline::config::{EngineConfig, CONFIG_ENV};
use guardline::evaluation::MatchMode;

mod evaluate;
mod images;
mod render;
mod run;
mod validate;

#[derive(Debug, Parser)]
#[command(name = "guardline", version, about = "Mask, face-hand and distancing compliance over recorded detections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assess every frame of a detection stream and write a report.
    Run(run::RunArgs),
    /// Score reports against ground truth and print the accuracy table.
    Evaluate(evaluate::EvaluateArgs),
    /// Draw report decisions onto frame images.
    Render(render::RenderArgs),
    /// Check any guardline file (or a TOML config) and list its problems.
    Validate(validate::ValidateArgs),
}

/// Options shared by the subcommands that read the engine config.
#[derive(Debug, Args)]
pub(crate) struct ConfigArgs {
    /// Engine configuration file (TOML).
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    pub(crate) fn load(&self) -> Result<EngineConfig> {
        match &self.config {
            Some(path) => Ok(EngineConfig::load(path)?),
            None => Ok(EngineConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub(crate) enum MatchModeArg {
    ById,
    ByIou,
}

impl From<MatchModeArg> for MatchMode {
    fn from(m: MatchModeArg) -> Self {
        match m {
            MatchModeArg::ById => MatchMode::ById,
            MatchModeArg::ByIou => MatchMode::ByIou,
        }
    }
}

/// Bad combination of arguments that clap cannot catch; exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub(crate) struct UsageError(pub String);

pub(crate) fn open(path: &Path, what: &str) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {what} file {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub(crate) fn create(path: &Path, what: &str) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {what} file {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Render(a) => render::run(a),
        Command::Validate(a) => validate::run(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
