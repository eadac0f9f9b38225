mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::output::Failure;

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("INFOMISS_THREADS") {
        Ok(v) => v.parse().map(Some).map_err(|_| {
            Failure::usage(format!(
                "INFOMISS_THREADS must be a positive integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let config = cli.config.as_deref().map(output::load_config).transpose()?;
    let name = cli.command.name();
    let section = config
        .as_ref()
        .map(|c| output::config_section(c, name))
        .transpose()?;
    let section = section.as_ref();
    match cli.command {
        Command::Are(a) => commands::are(output::merge(a, section)?, threads),
        Command::Simulate(a) => commands::simulate(output::merge(a, section)?, threads),
        Command::Fit(a) => commands::fit(output::merge(a, section)?, threads),
        Command::Gen(a) => commands::gen(output::merge(a, section)?, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
