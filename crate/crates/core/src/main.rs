use std::process::ExitCode;

use clap::Parser;
use panjer_track::cli::{execute, Cli};

fn main() -> ExitCode {
    execute(Cli::parse())
}
