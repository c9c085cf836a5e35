mod args;
mod commands;
mod losses;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// 1 for bad input, 2 for anything that went wrong while running.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<kinalign::Error> for Failure {
    fn from(e: kinalign::Error) -> Self {
        use kinalign::Error as E;
        match e {
            E::Io { .. } | E::Diverged { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<kinalign_losses::Error> for Failure {
    fn from(e: kinalign_losses::Error) -> Self {
        match e {
            kinalign_losses::Error::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

fn run(cli: Cli) -> CmdResult {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => commands::generate(a, seed),
        Command::Simulate(a) => commands::simulate(a, seed),
        Command::Validate(a) => commands::validate(a, seed),
        Command::Losses { command } => losses::run(command, seed),
        Command::EvalPis(a) => commands::eval_pis(a, seed),
        Command::Project(a) => commands::project(a, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_max_level(cli.log_level)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            tracing::error!(code = f.code(), "{}", f.message());
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
