use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::error;
use split_nls_cli::error::EXIT_RUNTIME;
use split_nls_cli::{parse_config, run_command, CliError, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Simulate,
    Converge,
    Stability,
    Probe,
    Defect,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Simulate => Command::Simulate,
            CommandArg::Converge => Command::Converge,
            CommandArg::Stability => Command::Stability,
            CommandArg::Probe => Command::Probe,
            CommandArg::Defect => Command::Defect,
        }
    }
}

/// Split-step solver and experiment harness for the nonlinear Schrödinger
/// equation on a periodic box.
#[derive(Debug, Parser)]
#[command(name = "split-nls", version)]
struct Cli {
    command: CommandArg,
    /// JSON experiment config; `-` reads standard input.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json, rows.csv, plot.svg.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for ladder rows (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn read_config(path: &PathBuf) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), source: e })
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let text = read_config(&cli.config)?;
    let config = parse_config(&text)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Invalid("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcome = pool.install(|| run_command(&config, cli.command.into(), &cli.out))?;
    if let Some(reason) = &outcome.report.reason {
        eprintln!("{}: {reason}", Command::from(cli.command));
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            error!("{err}");
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_RUNTIME as u8))
}
