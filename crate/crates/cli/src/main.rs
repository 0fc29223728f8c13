//! `hmrs`: inspect MovieLens-style data, train segment models, recommend
//! movies and run cross-validated evaluations.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use hmrs_core::config::KEYS;
use hmrs_core::{Config, Error};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::UnknownUser(_)
            | Error::UnknownMovie(_) => CliError::Usage(msg),
            Error::Io { .. }
            | Error::Malformed { .. }
            | Error::RatingOutOfRange { .. }
            | Error::DanglingUser { .. }
            | Error::DanglingMovie { .. }
            | Error::Model(_) => CliError::Data(msg),
            Error::EmptyUserSet | Error::DimensionMismatch { .. } | Error::Leakage(_) => {
                CliError::Internal(msg)
            }
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn cli() -> Command {
    let mut cmd = Command::new("hmrs")
        .about("Hybrid demographic / SOM / resource-allocation movie recommender")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .global(true)
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("JSON file of dotted keys; flags override it"),
        )
        .arg(
            Arg::new("verbose")
                .long("verbose")
                .short('v')
                .global(true)
                .action(ArgAction::SetTrue)
                .help("log progress to stderr"),
        );
    for doc in KEYS {
        cmd = cmd.arg(
            Arg::new(doc.key)
                .long(doc.key)
                .global(true)
                .value_name("VALUE")
                .help(doc.help)
                .help_heading("Configuration"),
        );
    }
    cmd.subcommand(
        Command::new("inspect").about("Print dataset counts, segment sizes and genre coverage"),
    )
    .subcommand(
        Command::new("train").about("Train and save the models of every configured segment"),
    )
    .subcommand(
        Command::new("recommend")
            .about("Top-K movies for one user from saved models")
            .arg(
                Arg::new("user")
                    .long("user")
                    .short('u')
                    .required(true)
                    .value_parser(value_parser!(u32))
                    .help("user id"),
            )
            .arg(
                Arg::new("models")
                    .long("models")
                    .short('m')
                    .required(true)
                    .value_name("DIR")
                    .value_parser(value_parser!(PathBuf))
                    .help("directory written by `hmrs train`"),
            )
            .arg(
                Arg::new("segment").long("segment").help(
                    "segment model to use (default: first trained segment containing the user)",
                ),
            )
            .arg(
                Arg::new("k")
                    .short('k')
                    .value_name("K")
                    .help("shorthand for --recommend.k"),
            ),
    )
    .subcommand(
        Command::new("evaluate")
            .about("Cross-validated MAE report")
            .arg(
                Arg::new("variant")
                    .long("variant")
                    .help("shorthand for --eval.variant"),
            )
            .arg(
                Arg::new("baselines")
                    .long("baselines")
                    .value_name("LIST")
                    .help("comma list of further variants to run under the same folds and seeds"),
            ),
    )
}

/// Defaults, then `base` (a saved config), then `--config`, then flags.
pub fn resolve_config(matches: &ArgMatches, base: Option<Config>) -> CliResult<Config> {
    let mut config = base.unwrap_or_default();
    if let Some(path) = matches.get_one::<PathBuf>("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        config.merge_json(&text)?;
    }
    for doc in KEYS {
        if let Some(value) = matches.get_one::<String>(doc.key) {
            config.set(doc.key, value)?;
        }
    }
    Ok(config)
}

fn run(matches: &ArgMatches) -> CliResult<()> {
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match name {
        "inspect" => commands::inspect(&resolve_config(sub, None)?),
        "train" => commands::train(&resolve_config(sub, None)?),
        "recommend" => commands::recommend(sub),
        "evaluate" => commands::evaluate(sub),
        other => Err(CliError::Internal(format!("unhandled command {other}"))),
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let verbose = matches
        .subcommand()
        .is_some_and(|(_, sub)| sub.get_flag("verbose"));
    env_logger::Builder::new()
        .filter_level(if verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
