//! `ecr` — run, serve, and audit phase-estimation randomness sessions.
//!
//! Exit codes: 0 on success (a `not-certified` verdict is still a
//! successful run), 1 for unexpected I/O, 2 for configuration errors,
//! 3 for protocol violations (including tampered round logs), 4 when an
//! oracle check fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecr_cli::artifacts::{self, ArtifactError};
use ecr_cli::checks;
use ecr_cli::client::{self, ClientError};
use ecr_cli::config::{self, ConfigError, Overrides, ScenarioConfig, Transport};
use ecr_cli::scenario::{self, ScenarioError};
use ecr_cli::server::{self, ServeError};

/// Default endpoint when neither `--bind`/`--connect` nor `ECR_BIND` is
/// given.
const DEFAULT_ENDPOINT: &str = "127.0.0.1:46711";

#[derive(Parser, Debug)]
#[command(
    name = "ecr",
    version,
    about = "Phase-estimation randomness: simulate sessions, serve or play the wire protocol, audit logs",
    after_help = "Exit codes: 0 success, 1 I/O, 2 configuration, 3 protocol violation, 4 oracle-check failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a full session end to end and print the certification report.
    Simulate(ScenarioArgs),
    /// Listen for provers and run one verifier session per connection.
    ServeVerifier {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Address to listen on (overrides ECR_BIND; port 0 picks a free one).
        #[arg(long, value_name = "ADDR")]
        bind: Option<String>,
        /// Stop after this many sessions instead of serving forever.
        #[arg(long, value_name = "N")]
        max_sessions: Option<u64>,
    },
    /// Connect to a verifier and play the configured prover strategy.
    ProveClient {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Verifier address (overrides ECR_BIND).
        #[arg(long, value_name = "ADDR")]
        connect: Option<String>,
    },
    /// Re-derive every built-in analytic identity and print a pass/fail table.
    OracleCheck {
        /// Also write the table to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Re-score a stored round log and print the resulting report.
    Report {
        /// Round log produced by `simulate` or `serve-verifier`.
        rounds_log: PathBuf,
        /// Also write the report artifact to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Regenerate the running-MSE plotting curve from a stored round log.
    EmitCurve {
        /// Round log produced by `simulate` or `serve-verifier`.
        rounds_log: PathBuf,
        /// Destination CSV path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

/// Scenario selection plus the overrides shared by every session-running
/// subcommand. Flags beat `ECR_SEED`, which beats the preset or file.
#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in scenario name.
    #[arg(long, value_parser = config::PRESET_NAMES, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML scenario file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of rounds in the session.
    #[arg(long)]
    rounds: Option<u64>,
    /// Seed for the verifier's phase and readout randomness.
    #[arg(long)]
    seed: Option<u64>,
    /// Certification threshold in null standard deviations.
    #[arg(long)]
    k_sigma: Option<f64>,
    /// How verifier and prover are connected during `simulate`.
    #[arg(long, value_enum)]
    transport: Option<Transport>,
    /// Per-read timeout for stream transports, in seconds.
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Write the round-by-round JSONL log here.
    #[arg(long, value_name = "FILE")]
    rounds_log: Option<PathBuf>,
    /// Write the running-MSE CSV curve here.
    #[arg(long, value_name = "FILE")]
    curve: Option<PathBuf>,
    /// Write the report artifact here (in addition to stdout).
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let overrides = Overrides {
            rounds: self.rounds,
            seed: self.seed,
            k_sigma: self.k_sigma,
            transport: self.transport,
            timeout_secs: self.timeout_secs,
            rounds_log: self.rounds_log.clone(),
            curve: self.curve.clone(),
            report: self.report.clone(),
        };
        ScenarioConfig::resolve(self.preset.as_deref(), self.config.as_deref(), &overrides)
    }
}

/// A terminal failure: the message for stderr and the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, err: impl std::fmt::Display) -> Failure {
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(err: ConfigError) -> Failure {
        Failure::new(2, err)
    }
}

impl From<ArtifactError> for Failure {
    fn from(err: ArtifactError) -> Failure {
        let code = match &err {
            ArtifactError::Io { .. } => 1,
            // A log that does not parse or does not re-score is evidence of
            // tampering, not of a local fault.
            ArtifactError::Malformed { .. } | ArtifactError::Verifier(_) => 3,
        };
        Failure::new(code, err)
    }
}

impl From<ScenarioError> for Failure {
    fn from(err: ScenarioError) -> Failure {
        match err {
            ScenarioError::Config(e) => e.into(),
            ScenarioError::Artifact(e) => e.into(),
            ScenarioError::Aborted { .. } | ScenarioError::Loopback(_) => Failure::new(3, err),
        }
    }
}

impl From<ClientError> for Failure {
    fn from(err: ClientError) -> Failure {
        match err {
            ClientError::Connect { .. } => Failure::new(1, err),
            ClientError::Wire(_) => Failure::new(3, err),
            ClientError::Artifact(e) => e.into(),
        }
    }
}

impl From<ServeError> for Failure {
    fn from(err: ServeError) -> Failure {
        match err {
            ServeError::Bind { .. } | ServeError::Accept(_) | ServeError::Internal(_) => {
                Failure::new(1, err)
            }
            ServeError::Artifact(e) => e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Simulate(args) => {
            let config = args.resolve()?;
            let products = scenario::run_scenario(&config)?;
            print!("{}", products.artifact.render());
            Ok(ExitCode::SUCCESS)
        }
        Command::ServeVerifier {
            scenario: args,
            bind,
            max_sessions,
        } => {
            let config = args.resolve()?;
            let endpoint = config::resolve_endpoint(bind.as_deref(), DEFAULT_ENDPOINT);
            let summary = server::serve(&config, &endpoint, max_sessions)?;
            eprintln!(
                "served {} session(s), {} failed",
                summary.sessions, summary.failures
            );
            if summary.failures > 0 {
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::ProveClient {
            scenario: args,
            connect,
        } => {
            let config = args.resolve()?;
            let endpoint = config::resolve_endpoint(connect.as_deref(), DEFAULT_ENDPOINT);
            let mut strategy = config.build_strategy()?;
            let report = client::prove_over_tcp(
                &endpoint,
                &config,
                &mut strategy,
                config.output.report.as_deref(),
            )?;
            print!(
                "{}",
                artifacts::ReportArtifact::new(None, report).render()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { out } => {
            let rows = checks::run_all();
            let table = checks::render_table(&rows);
            print!("{table}");
            if let Some(path) = &out {
                std::fs::write(path, &table).map_err(|source| {
                    Failure::from(ArtifactError::Io {
                        path: path.clone(),
                        source,
                    })
                })?;
            }
            let passed = rows.iter().filter(|r| r.pass).count();
            eprintln!("oracle-check: {passed}/{} passed", rows.len());
            if passed == rows.len() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
        Command::Report { rounds_log, out } => {
            let artifact = scenario::rescore_log(&rounds_log)?;
            print!("{}", artifact.render());
            if let Some(path) = &out {
                artifacts::write_report(path, &artifact)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::EmitCurve { rounds_log, out } => {
            let rows = scenario::curve_from_log(&rounds_log, &out)?;
            eprintln!("emit-curve: {rows} row(s) written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
