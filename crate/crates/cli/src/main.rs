//! `qgeom`: reproduces the metric, curvature and finite-size data as CSV or
//! JSON, and runs the validation checks.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod table;
mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use commands::Output;
use config::{Command, Flags, RunConfig};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<qgeom::Error> for Failure {
    fn from(e: qgeom::Error) -> Self {
        match e {
            qgeom::Error::InvalidInput(m) => Failure::Config(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qgeom", version, about = "Classical and quantum metrics of the Dicke and LMG models")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    flags: Flags,
}

fn sink(c: &RunConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &c.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(c: &RunConfig) -> Result<(), Failure> {
    let output = match c.command() {
        Command::DickeMetrics => commands::dicke_metrics(c)?,
        Command::LmgThermo => commands::lmg_thermo(c)?,
        Command::LmgExact => commands::lmg_exact(c)?,
        Command::LmgMesh => commands::lmg_mesh(c)?,
        Command::PeaksFits => commands::peaks_fits(c)?,
        Command::Validate => {
            let verdicts = validate::run(c).map_err(Failure::Config)?;
            let passed = verdicts.iter().all(|v| v.passed);
            table::write_json(&json!({ "passed": passed, "checks": verdicts }), &mut *sink(c)?)?;
            let failed: Vec<&str> = verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
            return if failed.is_empty() { Ok(()) } else { Err(Failure::Validation(failed.join(", "))) };
        }
    };
    let mut out = sink(c)?;
    match output {
        Output::Table(t) => t.emit(c.format, &mut *out)?,
        Output::Json(v) => table::write_json(&v, &mut *out)?,
    }
    out.flush().map_err(|e| Failure::Io(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let print = cli.flags.print_config;
    let result = RunConfig::resolve(cli.command, cli.flags).and_then(|c| {
        if print {
            println!("{}", serde_json::to_string_pretty(&c).expect("config serialises"));
            Ok(())
        } else {
            run(&c)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qgeom: {e}");
            ExitCode::from(e.code())
        }
    }
}
