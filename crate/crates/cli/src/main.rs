//! `interurn` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime error, 2 validation or usage error.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use args::{AnalyzeCommand, Cli, Command, IngestCommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(interurn::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<interurn::Error> for CliError {
    fn from(e: interurn::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) if e.is_validation() => 2,
            CliError::Lib(_) => 1,
        }
    }
}

pub struct Globals {
    pub gnuplot_stub: bool,
}

/// Merges config values, then either prints the result or runs `f`.
fn dispatch<T, F>(
    name: &str,
    args: T,
    matches: &ArgMatches,
    config: &Map<String, Value>,
    print_config: bool,
    f: F,
) -> Result<(), CliError>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce(T) -> Result<(), CliError>,
{
    let (args, value) = config::merge(args, matches, config)?;
    if print_config {
        let mut shown = Map::new();
        shown.insert("command".into(), Value::String(name.into()));
        if let Value::Object(fields) = value {
            shown.extend(fields);
        }
        interurn::io::write_json(std::io::stdout().lock(), &shown)?;
        return Ok(());
    }
    f(args)
}

fn run(cli: Cli, matches: &ArgMatches) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(path) => config::load(path)?,
        None => Map::new(),
    };
    let g = Globals {
        gnuplot_stub: cli.gnuplot_stub,
    };
    let pc = cli.print_config;
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    let leaf = |m: &ArgMatches| m.subcommand().expect("subcommand is required").1.clone();
    match cli.command {
        Command::Simulate(a) => dispatch("simulate", a, sub, &config, pc, commands::simulate),
        Command::Analyze(AnalyzeCommand::Heaps(a)) => {
            dispatch("analyze heaps", a, &leaf(sub), &config, pc, |a| commands::heaps(a, &g))
        }
        Command::Analyze(AnalyzeCommand::Ratio(a)) => {
            dispatch("analyze ratio", a, &leaf(sub), &config, pc, |a| commands::ratio(a, &g))
        }
        Command::Analyze(AnalyzeCommand::Composition(a)) => dispatch(
            "analyze composition",
            a,
            &leaf(sub),
            &config,
            pc,
            |a| commands::composition(a, &g),
        ),
        Command::Spectral(a) => dispatch("spectral", a, sub, &config, pc, commands::spectral),
        Command::Ode(a) => dispatch("ode", a, sub, &config, pc, |a| commands::ode(a, &g)),
        Command::Estimate(a) => dispatch("estimate", a, sub, &config, pc, commands::estimate),
        Command::Study(a) => dispatch("study", a, sub, &config, pc, commands::study),
        Command::Ingest(IngestCommand::Tokens(a)) => {
            dispatch("ingest tokens", a, &leaf(sub), &config, pc, commands::tokens)
        }
        Command::Ingest(IngestCommand::Csv(a)) => {
            dispatch("ingest csv", a, &leaf(sub), &config, pc, commands::csv)
        }
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
