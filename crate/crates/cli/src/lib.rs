//! Experiment harness for `liftnet`.
//!
//! Each command resolves a flat configuration, runs, prints a report and
//! writes `config.txt`, `manifest.json` and any metrics or checkpoints into
//! its output directory.

pub mod battery;
pub mod classify;
pub mod config;
pub mod geometry_demos;
pub mod manifest;
pub mod table1;

use config::{Config, ConfigError};
use manifest::RunManifest;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid setting {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] liftnet::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Table1,
    SpdDemo,
    HyperbolicDemo,
    ClassifyDemo,
    Proptest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::SpdDemo => "spd-demo",
            Command::HyperbolicDemo => "hyperbolic-demo",
            Command::ClassifyDemo => "classify-demo",
            Command::Proptest => "proptest",
        }
    }

    fn defaults(self) -> (&'static str, &'static str) {
        match self {
            Command::Table1 => (table1::DEFAULTS, table1::QUICK),
            Command::SpdDemo => (geometry_demos::SPD_DEFAULTS, geometry_demos::SPD_QUICK),
            Command::HyperbolicDemo => (geometry_demos::HYPERBOLIC_DEFAULTS, geometry_demos::HYPERBOLIC_QUICK),
            Command::ClassifyDemo => (classify::DEFAULTS, classify::QUICK),
            Command::Proptest => (battery::DEFAULTS, battery::QUICK),
        }
    }
}

/// Command-line overrides, applied after the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub quick: bool,
}

pub struct RunContext {
    pub command: Command,
    pub config: Config,
    pub out: PathBuf,
}

/// Defaults, then the quick overlay, then the file, then flags.
pub fn resolve(command: Command, o: &Overrides) -> Result<RunContext, CliError> {
    let (defaults, quick) = command.defaults();
    let mut config = Config::from_defaults(defaults);
    if o.quick {
        config.overlay_text(quick)?;
    }
    if let Some(path) = &o.config {
        config.overlay_file(path)?;
    }
    if let Some(seed) = o.seed {
        config.set("seed", seed)?;
    }
    if let Some(data) = &o.data {
        config.set("data", data.display())?;
    }
    if let Some(out) = &o.out {
        config.set("out", out.display())?;
    }
    let out = PathBuf::from(config.raw("out"));
    Ok(RunContext { command, config, out })
}

/// Runs the command and writes its manifest.
pub fn execute(ctx: &RunContext) -> Result<RunManifest, CliError> {
    let start = std::time::Instant::now();
    let mut manifest = match ctx.command {
        Command::Table1 => table1::cmd_table1(ctx)?,
        Command::SpdDemo => geometry_demos::cmd_spd_demo(ctx)?,
        Command::HyperbolicDemo => geometry_demos::cmd_hyperbolic_demo(ctx)?,
        Command::ClassifyDemo => classify::cmd_classify_demo(ctx)?,
        Command::Proptest => battery::cmd_proptest(ctx)?,
    };
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    for c in &manifest.checks {
        println!("{}", c.line());
    }
    manifest::write_run(&ctx.out, &manifest, &ctx.config)?;
    Ok(manifest)
}

/// Maps a run outcome to the process exit code.
pub fn exit_code(result: &Result<RunManifest, CliError>) -> i32 {
    match result {
        Ok(m) if m.passed() => EXIT_OK,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(_) => EXIT_CONFIG,
    }
}
