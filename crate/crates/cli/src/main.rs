mod commands;
mod config;
mod error;
mod io;

use clap::Parser;

use config::{Cli, Command};
use error::Result;

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(flags) => commands::simulate(&flags.resolve("simulate", None)?),
        Command::Estimate { input, flags } => commands::estimate_file(&flags.resolve("estimate", Some(input))?),
        Command::McStudy(flags) => commands::mc_study(&flags.resolve("mc-study", None)?),
        Command::Variance { regime, flags } => commands::variance(&flags.resolve("variance", None)?, regime),
        Command::PsdTable { points, flags } => commands::psd_table(&flags.resolve("psd-table", None)?, points),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("fbmw: {e}");
        std::process::exit(e.exit_code());
    }
}
