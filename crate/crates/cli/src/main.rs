mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::{Failure, Outcome};

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let (outcome, out) = match &cli.command {
        Command::Count(a) => (commands::count(a)?, &a.output),
        Command::Density(a) => (commands::density(a)?, &a.output),
        Command::Converge(a) => (commands::converge(a)?, &a.output),
        Command::PdxVerify(a) => (commands::pdx_verify(a)?, &a.output),
    };
    output::emit(&outcome.text, out.out.as_deref(), &cli.command).map_err(Failure::Io)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome { violation: None, .. }) => ExitCode::SUCCESS,
        Ok(Outcome { violation: Some(v), .. }) => {
            let failure = Failure::Tolerance(v);
            eprintln!("pdxprop: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
        Err(failure) => {
            eprintln!("pdxprop: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
