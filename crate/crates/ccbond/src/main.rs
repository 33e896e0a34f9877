use std::path::PathBuf;
use std::process::ExitCode;

use ccbond::commands;
use ccbond::config::{Mode, Overrides, RunConfig};
use ccbond::{AppError, AppResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccbond", version, about = "Convertible bond pricing, evaluation and backtesting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price one bond.
    Price(Common),
    /// Price bonds over their quote history and report pricing errors.
    Evaluate(Common),
    /// Run the factor backtests on a panel file.
    Backtest(Common),
    /// Simulate stock paths and dump the grid.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> AppResult<String> {
    let (common, f): (_, fn(&_) -> AppResult<String>) = match cli.command {
        Command::Price(c) => (c, commands::price),
        Command::Evaluate(c) => (c, commands::evaluate),
        Command::Backtest(c) => (c, commands::backtest),
        Command::Simulate(c) => (c, commands::simulate_cmd),
    };
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let settings = cfg.resolve(Overrides {
        seed: common.seed,
        paths: common.paths,
        mode: common.mode,
        out: common.out,
    })?;
    f(&settings)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let err = AppError::Invalid(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
