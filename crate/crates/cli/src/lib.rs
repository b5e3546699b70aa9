//! Command-line front end: parses a run configuration, dispatches to the
//! checker, simulator, verifier or generator and writes reports and CSV.

pub mod bundled;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::commands::{CliError, Context, EXIT_USAGE};
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "feller",
    version,
    about = "Feller-property checks and path simulation for state-dependent symbols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run configuration (TOML), or `bundled:<name>` for a shipped example.
    #[arg(long, value_name = "PATH")]
    pub config: String,
    /// Overrides `simulation.seed`.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Simulate or verify even when `check` fails.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the condition checkers on the declared symbol.
    Check(Common),
    /// Simulate paths and write them as CSV.
    Simulate(Common),
    /// Run the Monte Carlo verifier bundle.
    Verify(Common),
    /// Evaluate Af on a grid and write it as CSV.
    Generator(Common),
    /// List the bundled configurations.
    Examples,
}

/// Loads a config from a path or from the bundled set.
pub fn load_config(spec: &str) -> Result<RunConfig, CliError> {
    let parsed = match spec.strip_prefix("bundled:") {
        Some(name) => {
            let text = bundled::bundled(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "no bundled config named `{name}`; available: {}",
                    bundled::names().collect::<Vec<_>>().join(", ")
                ))
            })?;
            RunConfig::parse(text)
        }
        None => RunConfig::load(std::path::Path::new(spec)),
    };
    parsed.map_err(|e| CliError::Usage(format!("{spec}: {e}")))
}

fn context(c: &Common) -> Result<Context, CliError> {
    let mut config = load_config(&c.config)?;
    if let Some(s) = c.seed {
        config.simulation.seed = Some(s);
    }
    let out_dir = c.out.clone().unwrap_or_else(|| config.output.dir.clone());
    Ok(Context {
        config,
        out_dir,
        force: c.force,
    })
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let status = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if status == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return status;
        }
    };
    let (common, cmd): (&Common, fn(&Context) -> Result<commands::Outcome, CliError>) =
        match &cli.command {
            Command::Check(c) => (c, commands::cmd_check),
            Command::Simulate(c) => (c, commands::cmd_simulate),
            Command::Verify(c) => (c, commands::cmd_verify),
            Command::Generator(c) => (c, commands::cmd_generator),
            Command::Examples => {
                for (name, text) in bundled::BUNDLED {
                    let desc = RunConfig::parse(text)
                        .map(|c| c.description)
                        .unwrap_or_default();
                    let _ = writeln!(out, "{name:24} {desc}");
                }
                return 0;
            }
        };
    match context(common).and_then(|ctx| cmd(&ctx)) {
        Ok(o) => {
            let _ = write!(out, "{}", o.stdout);
            o.status
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
