//! Command-line driver: builds the coefficient tables once per run and
//! writes sign-change, moment and constant reports.
//!
//! Exit codes: 0 success, 1 usage, 2 a verification or lower-bound check
//! failed, 3 resource or I/O trouble.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod tables;

pub use config::{CommonArgs, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(
    name = "symsign",
    version,
    about = "Signs of symmetric-power Hecke eigenvalues on sums of two squares"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write q-expansion coefficients and check the Hecke relations.
    Coeffs(CoeffsArgs),
    /// Sign changes at each checkpoint and the lower-bound check (j >= 2).
    Signs(CommonArgs),
    /// First and second moments weighted by r_2.
    Moments(CommonArgs),
    /// Euler-product estimate of the second-moment constant C_j.
    Cj(CommonArgs),
    /// All of the above into one directory.
    Report(CommonArgs),
}

#[derive(Args, Debug)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of coefficients.
    #[arg(long, value_parser = config::parse_count, default_value = "10000")]
    pub trunc: usize,
}

fn dispatch(cmd: &Command) -> CliResult<i32> {
    let common = match cmd {
        Command::Coeffs(a) => &a.common,
        Command::Signs(a) | Command::Moments(a) | Command::Cj(a) | Command::Report(a) => a,
    };
    let cfg = RunConfig::from_args(common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Resource(e.to_string()))?;
    pool.install(|| match cmd {
        Command::Coeffs(a) => commands::cmd_coeffs(&cfg, a.trunc),
        Command::Signs(_) => commands::cmd_signs(&cfg),
        Command::Moments(_) => commands::cmd_moments(&cfg),
        Command::Cj(_) => commands::cmd_cj(&cfg),
        Command::Report(_) => commands::cmd_report(&cfg),
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("symsign: {e}");
            e.exit_code()
        }
    }
}
