mod commands;
mod input;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CurvesArgs, DistArgs, OracleArgs, SimulateArgs, TestArgs};

/// Two-sample V-test: exact and asymptotic p-values, null tables,
/// limit-law curves, Monte Carlo comparisons and self-checks.
#[derive(Debug, Parser)]
#[command(name = "vtest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test whether the X sample is stochastically smaller than Y.
    Test(TestArgs),
    /// Tabulate the exact null distribution for m = n·p.
    Dist(DistArgs),
    /// Exact finite-sample CDFs next to the limit law, as CSV.
    Curves(CurvesArgs),
    /// Mean p-values (or rejection rates) of the V-test and the Smirnov test.
    Simulate(SimulateArgs),
    /// Check the closed-form null against enumeration and bridge simulation.
    Oracle(OracleArgs),
}

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub const INPUT: u8 = 2;
    pub const TIE: u8 = 3;
    pub const VERIFICATION: u8 = 4;

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: Self::INPUT,
            message: message.into(),
        }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Self {
            code: Self::VERIFICATION,
            message: message.into(),
        }
    }

    pub fn io(err: std::io::Error) -> Self {
        Self {
            code: 1,
            message: err.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<vtest_core::Error> for Failure {
    fn from(err: vtest_core::Error) -> Self {
        use vtest_core::Error as E;
        let code = match &err {
            E::Tie { .. } => Self::TIE,
            E::EmptySample(_)
            | E::NonFinite { .. }
            | E::UnsupportedSampleRatio { .. }
            | E::OutOfRange { .. }
            | E::InvalidParameter(_)
            | E::EnumerationTooLarge { .. } => Self::INPUT,
            _ => 1,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Self {
        Self {
            code: 1,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => commands::test(a),
        Command::Dist(a) => commands::dist(a),
        Command::Curves(a) => commands::curves(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
