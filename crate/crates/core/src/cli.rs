//! Command-line front end: `run`, `compare` and `serve`.
//!
//! Exit codes: 0 success, 2 bad flags, 3 scenario rejected, 4 I/O failure,
//! 5 simulation or server failure.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::live::{serve, LiveConfig, LiveError};
use crate::lmu::{Algorithm, Exact, PenaltyReport};
use crate::simnet::{run_day, Scenario, ScenarioError, SimError, SimResult};

#[derive(Debug, Parser)]
#[command(name = "sln-han", version, about = "Smart-load-node home area network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one day under one algorithm.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = Algorithm::Priority)]
        algorithm: Algorithm,
        /// Overrides the link seed in the scenario.
        #[arg(long, env = "SLN_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "SLN_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Simulate the same day without and with scheduling and report the savings.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, env = "SLN_SEED")]
        seed: Option<u64>,
        #[arg(long, env = "SLN_OUT", default_value = "out")]
        out: PathBuf,
    },
    /// Run a paced simulation and stream it over WebSocket.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8765")]
        listen: SocketAddr,
        #[arg(long, default_value_t = Algorithm::Priority)]
        algorithm: Algorithm,
        #[arg(long, env = "SLN_SEED")]
        seed: Option<u64>,
        /// Wall-clock milliseconds per simulated interval.
        #[arg(long, default_value_t = 1000)]
        tick_ms: u64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Live(#[from] LiveError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Sim(_) | CliError::Live(_) => 5,
        }
    }
}

/// Summary written next to a single run's profile.
#[derive(Debug, Serialize)]
pub struct RunSummary<'a> {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub penalty: &'a PenaltyReport,
    pub energy_delivered_kwh: &'a std::collections::BTreeMap<crate::domain::LoadId, f64>,
    pub per_load_on_intervals: &'a std::collections::BTreeMap<crate::domain::LoadId, Vec<usize>>,
    pub run_complete_acks: usize,
}

/// Case I (no scheduling) against case II (priority scheduling).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub case1: PenaltyReport,
    pub case2: PenaltyReport,
    /// Penalty saved, in units of x.
    pub savings: Exact,
    /// kWh over the MDL avoided.
    pub savings_energy: Exact,
}

impl RunReport {
    pub fn new(seed: u64, case1: &SimResult, case2: &SimResult) -> Self {
        let c1 = case1.penalty_report.clone();
        let c2 = case2.penalty_report.clone();
        Self {
            seed,
            savings: &c1.penalty - &c2.penalty,
            savings_energy: &c1.energy_over_mdl - &c2.energy_over_mdl,
            case1: c1,
            case2: c2,
        }
    }
}

/// Runs both cases of `scenario` and compares them.
pub fn compare(scenario: &Scenario) -> Result<(RunReport, SimResult, SimResult), SimError> {
    let none = run_day(scenario, Algorithm::None)?;
    let priority = run_day(scenario, Algorithm::Priority)?;
    Ok((RunReport::new(scenario.link.seed, &none, &priority), none, priority))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<Scenario, CliError> {
    let scenario = Scenario::load(path)?;
    Ok(match seed {
        Some(seed) => scenario.with_seed(seed),
        None => scenario,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn describe(report: &PenaltyReport) -> String {
    format!(
        "{} kWh over MDL in {} intervals, penalty {} x",
        report.energy_over_mdl.to_f64(),
        report.intervals_over,
        report.penalty.to_f64()
    )
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    match command {
        Command::Run {
            scenario,
            algorithm,
            seed,
            out: dir,
        } => {
            let scenario = load_scenario(&scenario, seed)?;
            let result = run_day(&scenario, algorithm)?;
            ensure_dir(&dir)?;
            write_file(&dir.join("profile.csv"), &result.profile_csv())?;
            write_file(&dir.join("events.log"), &result.event_log_text())?;
            let summary = RunSummary {
                algorithm,
                seed: result.seed,
                penalty: &result.penalty_report,
                energy_delivered_kwh: &result.energy_delivered_kwh,
                per_load_on_intervals: &result.per_load_on_intervals,
                run_complete_acks: result.run_complete_acks,
            };
            write_file(&dir.join("report.json"), &to_json(&summary))?;
            writeln!(out, "{algorithm}: {}", describe(&result.penalty_report)).map_err(stdout_err)?;
            writeln!(out, "wrote {}", dir.display()).map_err(stdout_err)?;
        }
        Command::Compare {
            scenario,
            seed,
            out: dir,
        } => {
            let scenario = load_scenario(&scenario, seed)?;
            let (report, none, priority) = compare(&scenario)?;
            ensure_dir(&dir)?;
            write_file(&dir.join("profile_none.csv"), &none.profile_csv())?;
            write_file(&dir.join("profile_priority.csv"), &priority.profile_csv())?;
            write_file(&dir.join("report.json"), &to_json(&report))?;
            writeln!(out, "case I  (none)    : {}", describe(&report.case1)).map_err(stdout_err)?;
            writeln!(out, "case II (priority): {}", describe(&report.case2)).map_err(stdout_err)?;
            writeln!(
                out,
                "savings: {} x ({} kWh)",
                report.savings.to_f64(),
                report.savings_energy.to_f64()
            )
            .map_err(stdout_err)?;
        }
        Command::Serve {
            scenario,
            listen,
            algorithm,
            seed,
            tick_ms,
        } => {
            let scenario = load_scenario(&scenario, seed)?;
            let config = LiveConfig {
                listen,
                tick: Duration::from_millis(tick_ms.max(1)),
                algorithm,
                max_sessions: None,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: "<runtime>".into(),
                source,
            })?;
            writeln!(out, "serving on ws://{listen}").map_err(stdout_err)?;
            runtime.block_on(serve(scenario, config, None))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let mut rendered = e.render().to_string();
            if code != 0 && !rendered.contains("Usage:") {
                rendered.push_str(&format!("\n{}\n", Cli::command().render_usage()));
            }
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let code = run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
