use clap::{Args, Parser, Subcommand};
use liftnet_cli::{execute, exit_code, resolve, Command, Overrides};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "liftnet", version, about = "Lifted-network experiments and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Housing regression: vanilla, good, bad and rand input/output maps.
    Table1(Flags),
    /// SPD-valued regression through Log/Exp at fixed basepoints.
    SpdDemo(Flags),
    /// Poincaré-ball regression through Log0/Exp0.
    HyperbolicDemo(Flags),
    /// Two-disk multi-label classification with a logistic readout.
    ClassifyDemo(Flags),
    /// The invariant battery.
    Proptest(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` file layered over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Housing CSV (table1 only).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Small, fast settings; trained-quality thresholds become advisory.
    #[arg(long)]
    quick: bool,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::Table1(f) => (Command::Table1, f),
        Cmd::SpdDemo(f) => (Command::SpdDemo, f),
        Cmd::HyperbolicDemo(f) => (Command::HyperbolicDemo, f),
        Cmd::ClassifyDemo(f) => (Command::ClassifyDemo, f),
        Cmd::Proptest(f) => (Command::Proptest, f),
    };
    let overrides = Overrides {
        config: flags.config,
        seed: flags.seed,
        data: flags.data,
        out: flags.out,
        quick: flags.quick,
    };
    let result = resolve(command, &overrides).and_then(|ctx| execute(&ctx));
    match &result {
        Ok(m) => {
            let verdict = if m.passed() { "all checks passed" } else { "CHECKS FAILED" };
            println!("{}: {verdict} ({:.1}s)", command.name(), m.wall_time_secs);
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
