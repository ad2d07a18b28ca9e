//! `bar-explorer`: analyze, sweep and simulate serving scenarios, or serve the
//! analysis API.
//!
//! Reports go to stdout (or `--out`); diagnostics go to stderr, with verbosity
//! controlled by `BAR_EXPLORER_LOG` (e.g. `BAR_EXPLORER_LOG=debug`).
//!
//! Exit status: 0 on success, 1 when `--fail-on-infeasible` is set and the
//! design misses a constraint, 2 on input errors.

mod human;

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bar_core::report::{self, ReportError};
use bar_core::scenario::{parse_scenario, Scenario};
use bar_core::simulator::write_trace_lines;
use bar_core::{CostMode, Label};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing::{debug, info};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "bar-explorer", version, about = "Latency budget, authenticity and reasoning trade-off analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Budget breakdown, feasibility verdicts and n* for one scenario
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit with status 1 unless all three constraints hold
        #[arg(long)]
        fail_on_infeasible: bool,
    },
    /// Evaluate a (C, R) grid and mark its Pareto frontier (CSV, or JSON with --format machine)
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the discrete-event simulation and check it against the analytic bounds
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the line-delimited event trace to this file
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Start the HTTP analysis service
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Cost-model mode; overrides the scenario's `mode`
    #[arg(long, value_parser = parse_mode)]
    mode: Option<CostMode>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

fn parse_mode(s: &str) -> Result<CostMode, String> {
    s.parse()
}

enum Failure {
    Input(String),
    Infeasible(Label),
}

impl From<ReportError> for Failure {
    fn from(err: ReportError) -> Self {
        Failure::Input(err.to_string())
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let scenario = parse_scenario(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    debug!(path = %path.display(), name = ?scenario.name, "loaded scenario");
    Ok(scenario)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn machine<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize to JSON");
    bytes.push(b'\n');
    bytes
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { common, fail_on_infeasible } => {
            let scenario = load(&common.scenario)?;
            let mode = common.mode.unwrap_or(scenario.mode);
            let r = report::analyze(&scenario, mode);
            let bytes = match common.format {
                Format::Human => human::analyze(&r).into_bytes(),
                Format::Machine => machine(&r),
            };
            emit(common.out.as_deref(), &bytes)?;
            if fail_on_infeasible && r.label != Label::All {
                return Err(Failure::Infeasible(r.label));
            }
            Ok(())
        }
        Command::Sweep { common } => {
            let scenario = load(&common.scenario)?;
            let mode = common.mode.unwrap_or(scenario.mode);
            let r = report::sweep(&scenario, mode)?;
            info!(cells = r.cells, frontier = r.frontier_size, "sweep done");
            let bytes = match common.format {
                Format::Human => {
                    let mut buf = Vec::new();
                    r.write_csv(&mut buf).expect("writing to a Vec cannot fail");
                    buf
                }
                Format::Machine => machine(&r),
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::Simulate { common, seed, trace } => {
            let scenario = load(&common.scenario)?;
            if common.mode.is_some() {
                debug!("--mode has no effect on simulate; validation always uses theorem-exact");
            }
            let r = report::simulate_scenario(&scenario, seed)?;
            if let Some(path) = &trace {
                let mut buf = Vec::new();
                write_trace_lines(&r.trace, &mut buf).expect("writing to a Vec cannot fail");
                emit(Some(path), &buf)?;
            }
            let bytes = match common.format {
                Format::Human => human::simulate(&r).into_bytes(),
                Format::Machine => machine(&r),
            };
            emit(common.out.as_deref(), &bytes)
        }
        Command::Serve { bind, port } => {
            let addr: SocketAddr = format!("{bind}:{port}")
                .parse()
                .map_err(|e| Failure::Input(format!("invalid bind address {bind}:{port}: {e}")))?;
            let runtime =
                tokio::runtime::Runtime::new().map_err(|e| Failure::Input(format!("cannot start runtime: {e}")))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(addr)
                    .await
                    .map_err(|e| Failure::Input(format!("cannot bind {addr}: {e}")))?;
                eprintln!("listening on http://{}", listener.local_addr().unwrap_or(addr));
                bar_service::serve(listener).await.map_err(|e| Failure::Input(format!("server error: {e}")))
            })
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("BAR_EXPLORER_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Infeasible(label)) => {
            eprintln!("infeasible: design satisfies {label}, not ALL");
            ExitCode::from(1)
        }
        Err(Failure::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
