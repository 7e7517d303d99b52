//! `vdisc`: build influence graphs, rank inspection priorities, scan for
//! discrepancy shifts and generate synthetic worlds.
//!
//! Exit codes: 0 success, 1 runtime or I/O error, 2 input validation error,
//! 3 usage error. Each error is one stderr line of the form
//! `vdisc: error[<kind>]: <message>`.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vdisc::cusum::CusumError;
use vdisc::influence::InfluenceError;
use vdisc::io::InputError;
use vdisc::pipeline::PipelineError;
use vdisc::ranking::RankingError;
use vdisc::scenario::ScenarioError;
use vdisc::GraphError;

#[derive(Debug, Parser)]
#[command(name = "vdisc", version, about = "Vertex discrepancy for risk-based inspection targeting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the normalized influence graph from urban-relations tables.
    BuildGraph(commands::BuildGraphArgs),
    /// Rank municipality-operator pairs for inspection at a month end.
    Rank(commands::RankArgs),
    /// Run CUSUM over daily discrepancy series.
    Cusum(commands::CusumArgs),
    /// Generate a synthetic input set.
    Simulate(commands::SimulateArgs),
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for output files [default: .]
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Validation(Vec<String>),
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Runtime(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Usage(_) => 3,
        }
    }

    fn lines(&self) -> Vec<String> {
        let line = |kind: &str, msg: &str| format!("vdisc: error[{kind}]: {}", msg.replace('\n', " "));
        match self {
            CliError::Io { path, source } => vec![line("io", &format!("{}: {source}", path.display()))],
            CliError::Validation(msgs) => msgs.iter().map(|m| line("validation", m)).collect(),
            CliError::Usage(msg) => vec![line("usage", msg)],
            CliError::Runtime(msg) => vec![line("runtime", msg)],
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Io { file, source } => CliError::Io {
                path: file.into(),
                source,
            },
            InputError::Validation(errs) => CliError::Validation(errs.iter().map(|e| e.to_string()).collect()),
        }
    }
}

impl From<InfluenceError> for CliError {
    fn from(e: InfluenceError) -> Self {
        match e {
            InfluenceError::Invalid(msgs) => CliError::Validation(msgs),
            InfluenceError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Validation(vec![other.to_string()]),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Validation(vec![e.to_string()])
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Validation(vec![e.to_string()])
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        match e {
            RankingError::Pipeline(e) => e.into(),
            RankingError::Graph(e) => e.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<CusumError> for CliError {
    fn from(e: CusumError) -> Self {
        match e {
            CusumError::Pipeline(e) => e.into(),
            CusumError::Graph(e) => e.into(),
            CusumError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VDISC_LOG", "off")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("vdisc: error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(3);
        }
    };
    let result = match cli.command {
        Command::BuildGraph(args) => commands::build_graph(args),
        Command::Rank(args) => commands::rank(args),
        Command::Cusum(args) => commands::cusum(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            for line in e.lines() {
                eprintln!("{line}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
