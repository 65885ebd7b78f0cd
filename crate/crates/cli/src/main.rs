use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = nfda_cli::Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    ExitCode::from(nfda_cli::run(&cli))
}
