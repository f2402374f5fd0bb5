mod args;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match run::run(cli.command) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "heatrec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
