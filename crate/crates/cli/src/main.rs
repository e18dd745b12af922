//! `sphericity`: sphericity tests for data with far more variables than
//! observations, plus the simulation and verification tools behind them.
//!
//! Exit status: 0 on a clean run, 2 when `test` rejects sphericity with any
//! requested test, 1 on errors and on failed verifications.

mod input;
mod output;
mod simulate;
mod test_cmd;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sphericity", version, about = "Sphericity tests for p >> n data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test H0: Sigma = sigma^2 I on a CSV data matrix (rows = variables).
    Test(test_cmd::TestArgs),
    /// Run a Monte Carlo size/power plan.
    Simulate(simulate::SimulateArgs),
    /// Numerical checks of the theory behind the tests.
    Verify(VerifyArgs),
    /// List the bundled plans, or print one.
    Plans {
        name: Option<String>,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(subcommand)]
    what: VerifyCommand,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Mean-correction contour integrals against their closed forms.
    Contour(verify::ContourArgs),
    /// Moments of the spectral limit theorems by simulation.
    Lemma(verify::LemmaArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

pub const BUNDLED_PLANS: [(&str, &str); 3] = [
    ("table1_desk", include_str!("../../../plans/table1_desk.plan")),
    ("table2_desk", include_str!("../../../plans/table2_desk.plan")),
    ("table3_desk", include_str!("../../../plans/table3_desk.plan")),
];

pub fn bundled_plan(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".plan").unwrap_or(name);
    BUNDLED_PLANS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// What a command asks `main` to do on success.
pub enum Outcome {
    Clean,
    Rejected,
    ChecksFailed,
}

fn run(cli: Cli) -> Result<Outcome, String> {
    match cli.command {
        Command::Test(args) => test_cmd::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::Verify(v) => match v.what {
            VerifyCommand::Contour(args) => verify::contour(&args),
            VerifyCommand::Lemma(args) => verify::lemma(&args),
        },
        Command::Plans { name } => plans(name.as_deref()),
    }
}

fn plans(name: Option<&str>) -> Result<Outcome, String> {
    match name {
        Some(name) => {
            let text = bundled_plan(name).ok_or_else(|| format!("no bundled plan named '{name}'"))?;
            print!("{text}");
        }
        None => {
            for (name, text) in BUNDLED_PLANS {
                let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{name:<12} {about}");
            }
        }
    }
    Ok(Outcome::Clean)
}

/// Reads a whole file, naming it in the error.
pub fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which is reserved for rejections
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Ok(Outcome::ChecksFailed) => {
            eprintln!("verification failed: at least one check is outside its tolerance");
            ExitCode::from(1)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
