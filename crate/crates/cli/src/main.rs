//! `sketchvote` command-line driver.
//!
//! Every subcommand prints a one-line JSON summary on stdout and writes a
//! `<output>.manifest.json` run manifest next to its primary output. Errors
//! are printed on stderr as one line of JSON; the exit status is 1 for
//! invalid input and 2 for filesystem failures.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::Command;

#[derive(Debug, Parser)]
#[command(
    name = "sketchvote",
    about = "Sketch embedding clustering, KNN++ voting and a small CNN baseline",
    disable_version_flag = true
)]
struct Cli {
    /// Print toolkit and file format versions.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Top>,
}

#[derive(Debug, Subcommand)]
enum Top {
    #[command(flatten)]
    Run(Command),
    /// Re-run the command recorded in a run manifest.
    Replay { manifest: std::path::PathBuf },
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Io(String),
}

impl From<sketchvote::Error> for Failure {
    fn from(e: sketchvote::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl Failure {
    fn report(&self) -> ExitCode {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            message: &'a str,
        }
        let (kind, message, code) = match self {
            Failure::Invalid(m) => ("invalid", m.as_str(), 1),
            Failure::Io(m) => ("io", m.as_str(), 2),
        };
        let line = serde_json::to_string(&Line {
            error: kind,
            message,
        })
        .expect("serializable");
        eprintln!("{line}");
        ExitCode::from(code)
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn version_line() -> String {
    format!(
        "sketchvote {} (embedding-set format {f}, centroid-model format {f}, checkpoint format {f})",
        env!("CARGO_PKG_VERSION"),
        f = sketchvote::FORMAT_VERSION
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let message = e.kind().to_string();
            let detail = e.to_string();
            let first = detail
                .lines()
                .next()
                .unwrap_or(&message)
                .trim_start_matches("error: ");
            return Failure::Invalid(first.to_string()).report();
        }
    };
    if cli.version {
        println!("{}", version_line());
        return ExitCode::SUCCESS;
    }
    let result = match cli.command {
        Some(Top::Run(command)) => manifest::run_recorded(command),
        Some(Top::Replay { manifest }) => manifest::replay(&manifest),
        None => Err(Failure::Invalid("no subcommand given; see --help".into())),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => f.report(),
    }
}
