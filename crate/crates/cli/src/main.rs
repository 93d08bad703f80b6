use std::process::ExitCode;

use clap::Parser;
use impact_cli::app::{main_with, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IMPACT_LOG", "warn")).init();
    main_with(Cli::parse())
}
