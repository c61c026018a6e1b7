use std::process::ExitCode;

use clap::Parser;
use reflectionless::cli::{run, Cli};

fn main() -> ExitCode {
    run(&Cli::parse())
}
