//! `ocpx` command line front end and the WebSocket session service used by
//! the interactive viewer.

pub mod args;
mod commands;
pub mod error;
pub mod protocol;
pub mod server;
pub mod session;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{AnalyzeCommand, Cli, Command};
pub use error::{CliError, CliResult};

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status. Usage errors exit with 2.
pub fn dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Matrices(a) => commands::matrices(a, stdout),
        Command::Analyze(AnalyzeCommand::Curves(a)) => commands::curves(a, stdout),
        Command::Analyze(AnalyzeCommand::Crossover(a)) => commands::crossover(a, stdout),
        Command::Render(a) => commands::render_cmd(a, stdout),
        Command::SimulateExperiment(a) => commands::simulate(a, stdout),
        Command::Fit(a) => commands::fit(a, stdout),
        Command::Serve(a) => server::serve_cli(a),
    }
}
