//! `kext`: bound computations and plot data as CSV or SVG.

mod args;
mod commands;
mod grid;
mod table;

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use kext_core::conic::SolveOptions;
use kext_core::Error;
use serde_json::{Map, Value};

use crate::args::{known_keys, merge, Cli, Command, Format, GlobalArgs};
use crate::table::Table;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const GUARD: u8 = 2;
    pub const INVALID_INPUT: u8 = 3;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: exit::USAGE, message: message.into() }
    }

    pub fn invalid_input(message: impl Into<String>) -> Self {
        Self { code: exit::INVALID_INPUT, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionGuard { .. } | Error::Solver { .. } => exit::GUARD,
            Error::NotHermitian(_)
            | Error::NotPsd(_)
            | Error::InvalidTrace { .. }
            | Error::NotTracePreserving(_)
            | Error::NotUnitary { .. }
            | Error::DimensionMismatch(_) => exit::INVALID_INPUT,
            Error::InvalidParameter(_) | Error::Unbounded(_) | Error::Model(_) => exit::USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

fn read_config(global: &GlobalArgs) -> Result<Map<String, Value>, CliError> {
    let Some(path) = &global.config else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::usage("config file must hold a JSON object")),
        Err(e) => Err(CliError::usage(format!("config file: {e}"))),
    }
}

fn check_keys(file: &Map<String, Value>, allowed: &[String]) -> Result<(), CliError> {
    match file.keys().find(|k| !allowed.contains(k)) {
        Some(k) => Err(CliError::usage(format!("config file: unknown key '{k}'"))),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = read_config(&cli.global)?;
    let global = merge(&cli.global, &file).map_err(CliError::usage)?;
    let mut opts = SolveOptions::from_env();
    if let Some(tol) = global.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::usage(format!("tol = {tol} must be positive")));
        }
        opts.tol = tol;
    }
    let mut allowed = known_keys::<GlobalArgs>();

    macro_rules! merged {
        ($ty:ty, $a:expr) => {{
            allowed.extend(known_keys::<$ty>());
            check_keys(&file, &allowed)?;
            merge($a, &file).map_err(CliError::usage)?
        }};
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(global.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::usage(format!("worker pool: {e}")))?;
    let table: Table = pool.install(|| -> Result<Table, CliError> {
        match &cli.command {
            Command::PrivacyMax(a) => commands::privacy_max(&merged!(args::PrivacyMaxArgs, a), &opts),
            Command::KeyOneshot(a) => commands::key_oneshot(&merged!(args::KeyOneshotArgs, a), &opts),
            Command::KeyNshot(a) => commands::key_nshot(&merged!(args::KeyNshotArgs, a)),
            Command::MinCopies(a) => commands::min_copies(&merged!(args::MinCopiesArgs, a)),
            Command::Privcap(a) => commands::privcap(&merged!(args::PrivcapArgs, a), &opts),
            Command::MinUses(a) => commands::min_uses(&merged!(args::MinUsesArgs, a)),
            Command::Channel(a) => commands::channel(&merged!(args::ChannelArgs, a), &opts),
        }
    })?;

    let mut sink: Box<dyn Write> = match &global.output {
        Some(path) => Box::new(
            fs::File::create(path).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let written = match global.format.unwrap_or_default() {
        Format::Csv => table.write_csv(&mut sink).map_err(|e| e.to_string()),
        Format::Svg => sink.write_all(table.to_svg().as_bytes()).map_err(|e| e.to_string()),
    };
    written.and_then(|_| sink.flush().map_err(|e| e.to_string())).map_err(|e| CliError::usage(format!("output: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
