use std::process::ExitCode;

use clap::Parser;
use rotorsim_cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match configure_threads().and_then(|()| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rotorsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
