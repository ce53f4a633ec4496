//! Scenario orchestration: run a configured session end to end — either
//! in process or over a loopback wire — and leave the artifacts behind.

use std::net::TcpListener;
use std::time::Duration;

use ecr_core::verifier::{run_session, CertificationReport, RoundRecord};

use crate::artifacts::{self, ArtifactError, ReportArtifact};
use crate::client;
use crate::config::{ConfigError, ScenarioConfig, Transport};
use crate::server::{self, WireSession};
use crate::wire::WireError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("session aborted after {completed} completed rounds: {cause}")]
    Aborted { completed: u64, cause: String },
    #[error("loopback transport: {0}")]
    Loopback(String),
}

/// A finished run: the full round log, the verdict, and the rendered
/// report artifact (what `simulate` prints and saves).
pub struct RunProducts {
    pub records: Vec<RoundRecord>,
    pub report: CertificationReport,
    pub artifact: ReportArtifact,
}

/// Execute the scenario and write every configured artifact.
///
/// On a session abort the partial round log and curve are still written
/// before the error returns, so the transcript up to the failure is kept.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunProducts, ScenarioError> {
    config.validate()?;
    let session = match config.transport {
        Transport::InProcess => run_in_process(config)?,
        Transport::Stream => run_over_loopback(config)?,
    };
    server::write_session_artifacts(config, 0, &session)?;
    match session.outcome {
        Ok(report) => Ok(RunProducts {
            records: session.records,
            report,
            artifact: ReportArtifact::new(Some(config.seed), report),
        }),
        Err(e) => Err(ScenarioError::Aborted {
            completed: session.records.len() as u64,
            cause: e.to_string(),
        }),
    }
}

fn run_in_process(config: &ScenarioConfig) -> Result<WireSession, ScenarioError> {
    let mut strategy = config.build_strategy()?;
    match run_session(
        config.policy.clone(),
        &mut strategy,
        config.channel,
        config.rounds,
        config.seed,
        config.k_sigma,
    ) {
        Ok(output) => Ok(WireSession {
            records: output.records,
            outcome: Ok(output.report),
        }),
        Err(e) => Ok(WireSession {
            outcome: Err(WireError::Protocol(e.cause.to_string())),
            records: e.records,
        }),
    }
}

/// The stream transport, self-hosted: a verifier endpoint on a loopback
/// socket and a prover thread connecting to it, exercising the real wire
/// protocol byte for byte.
fn run_over_loopback(config: &ScenarioConfig) -> Result<WireSession, ScenarioError> {
    let listener = TcpListener::bind("127.0.0.1:0")
        .map_err(|e| ScenarioError::Loopback(format!("cannot bind: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| ScenarioError::Loopback(format!("no local address: {e}")))?;

    let client_config = config.clone();
    let prover = std::thread::spawn(move || -> Result<CertificationReport, String> {
        let mut strategy = client_config
            .build_strategy()
            .map_err(|e| e.to_string())?;
        client::prove_over_tcp(&addr.to_string(), &client_config, &mut strategy, None)
            .map_err(|e| e.to_string())
    });

    let (socket, _) = listener
        .accept()
        .map_err(|e| ScenarioError::Loopback(format!("accept failed: {e}")))?;
    socket
        .set_read_timeout(Some(Duration::from_secs(config.timeout_secs)))
        .and_then(|()| socket.set_nodelay(true))
        .map_err(|e| ScenarioError::Loopback(format!("socket options: {e}")))?;
    let session = server::drive_session(&socket, config);

    let client_view = prover
        .join()
        .map_err(|_| ScenarioError::Loopback("prover thread panicked".into()))?;

    // The prover's received report must be the verifier's report; a
    // mismatch would mean the wire corrupted the session.
    if let (Ok(server_report), Ok(client_report)) = (&session.outcome, &client_view) {
        if server_report != client_report {
            return Err(ScenarioError::Loopback(
                "prover and verifier disagree on the final report".into(),
            ));
        }
    }
    if let (Ok(_), Err(client_err)) = (&session.outcome, &client_view) {
        return Err(ScenarioError::Loopback(format!(
            "verifier finished but the prover failed: {client_err}"
        )));
    }
    Ok(session)
}

/// Re-score a stored round log and return the resulting report artifact.
pub fn rescore_log(path: &std::path::Path) -> Result<ReportArtifact, ScenarioError> {
    let (header, records) = artifacts::read_rounds_log(path)?;
    let report = artifacts::rescore(&header, &records)?;
    Ok(ReportArtifact::new(Some(header.seed), report))
}

/// Regenerate the plotting curve from a stored round log.
pub fn curve_from_log(
    log_path: &std::path::Path,
    out_path: &std::path::Path,
) -> Result<usize, ScenarioError> {
    let (header, records) = artifacts::read_rounds_log(log_path)?;
    artifacts::write_curve(
        out_path,
        header.seed,
        header.k_sigma,
        &header.policy,
        &records,
    )?;
    Ok(records.len())
}
