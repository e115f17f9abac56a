//! `rollinf` command-line front end.

mod args;
mod commands;
mod config;
mod sweep;

use std::process::ExitCode;

use clap::Parser;
use rollinf_core::Error;

use args::{Cli, Command};
use config::Settings;

/// 0 success, 1 usage, 2 data or format, 3 numerical failure.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Argument(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let settings = Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Generate(a) => commands::generate(a, &settings),
        Command::Basis(a) => commands::basis(a),
        Command::Project(a) => commands::project_cmd(a),
        Command::TrainStatic(a) => commands::train_static(a, &settings),
        Command::TrainRollout(a) => commands::train_rollout(a, &settings),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Stability(a) => commands::stability(a),
        Command::Sweep(a) => sweep::sweep(a, &settings),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
