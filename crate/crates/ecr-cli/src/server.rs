//! Verifier-side wire endpoint: accepts prover connections and drives
//! one session per connection against its own engine instance.
//!
//! Every connection gets the configured seed, so the service is
//! deterministic: any client playing the same strategy sees the same
//! challenges and outcomes. Sessions are fully isolated — separate
//! engines, separate generators — and may run concurrently.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::time::Duration;

use ecr_core::channel::ChannelError;
use ecr_core::verifier::{CertificationReport, RoundRecord, SessionEngine, VerifierError};

use crate::artifacts::{self, ArtifactError, LogHeader, ReportArtifact};
use crate::config::ScenarioConfig;
use crate::wire::{ErrorCode, MessageStream, Role, WireBody, WireError};

/// What one wire session left behind: the scored records (possibly
/// partial) and either the verdict or the failure that ended it.
pub struct WireSession {
    pub records: Vec<RoundRecord>,
    pub outcome: Result<CertificationReport, WireError>,
}

/// Run the verifier's side of one session over any byte stream.
pub fn drive_session<S: Read + Write>(stream: S, config: &ScenarioConfig) -> WireSession {
    let mut stream = MessageStream::new(stream);
    let mut engine = match SessionEngine::new(
        config.policy.clone(),
        config.channel,
        config.rounds,
        config.seed,
        config.k_sigma,
    ) {
        Ok(engine) => engine,
        Err(e) => {
            return WireSession {
                records: Vec::new(),
                outcome: Err(WireError::Protocol(format!("engine refused config: {e}"))),
            }
        }
    };

    match drive(&mut stream, &mut engine) {
        Ok(report) => WireSession {
            records: engine.into_records(),
            outcome: Ok(report),
        },
        Err(e) => {
            // Best-effort abort notice; the session is already lost.
            let code = match &e {
                WireError::VersionMismatch { .. } => ErrorCode::VersionMismatch,
                WireError::Timeout => ErrorCode::Timeout,
                _ => ErrorCode::ProtocolViolation,
            };
            let _ = stream.send(WireBody::Error {
                round_id: None,
                code,
                message: e.to_string(),
            });
            WireSession {
                records: engine.into_records(),
                outcome: Err(e),
            }
        }
    }
}

fn drive<S: Read + Write>(
    stream: &mut MessageStream<S>,
    engine: &mut SessionEngine,
) -> Result<CertificationReport, WireError> {
    // Handshake: the prover speaks first.
    match stream.recv()? {
        WireBody::Hello {
            role: Role::Prover,
        } => {}
        WireBody::Hello { role } => {
            return Err(WireError::Protocol(format!(
                "expected a prover hello, got role {role:?}"
            )))
        }
        other => {
            return Err(WireError::Protocol(format!(
                "expected hello, got {}",
                kind_name(&other)
            )))
        }
    }
    stream.send(WireBody::Hello {
        role: Role::Verifier,
    })?;

    for _ in 0..engine.total_rounds() {
        let round_id = engine
            .begin_round()
            .map_err(|e| WireError::Protocol(e.to_string()))?;
        stream.send(WireBody::Challenge { round_id })?;

        // The round stays open until its estimate arrives. Measurement
        // requests inside it are answered at most once.
        loop {
            match stream.recv()? {
                WireBody::Measure {
                    round_id: rid,
                    request,
                } => match engine.measure(rid, request) {
                    Ok(outcome) => stream.send(WireBody::Outcome {
                        round_id: rid,
                        outcome,
                    })?,
                    Err(VerifierError::Channel(ChannelError::AlreadyConsumed(_))) => {
                        // Single-use rule: refuse, but keep the round
                        // open — it will be scored from whatever
                        // estimate the prover still submits.
                        stream.send(WireBody::Error {
                            round_id: Some(rid),
                            code: ErrorCode::SingleUseViolation,
                            message: format!("round {rid} was already measured"),
                        })?;
                    }
                    Err(e) => return Err(WireError::Protocol(e.to_string())),
                },
                WireBody::Estimate {
                    round_id: rid,
                    estimate,
                } => {
                    engine
                        .submit_estimate(rid, estimate)
                        .map_err(|e| WireError::Protocol(e.to_string()))?;
                    break;
                }
                WireBody::Error { code, message, .. } => {
                    return Err(WireError::Refused { code, message })
                }
                other => {
                    return Err(WireError::Protocol(format!(
                        "unexpected {} inside a round",
                        kind_name(&other)
                    )))
                }
            }
        }
    }

    let report = engine
        .report()
        .map_err(|e| WireError::Protocol(e.to_string()))?;
    stream.send(WireBody::Finish { report })?;
    Ok(report)
}

fn kind_name(body: &WireBody) -> &'static str {
    match body {
        WireBody::Hello { .. } => "hello",
        WireBody::Challenge { .. } => "challenge",
        WireBody::Measure { .. } => "measure",
        WireBody::Outcome { .. } => "outcome",
        WireBody::Estimate { .. } => "estimate",
        WireBody::Finish { .. } => "finish",
        WireBody::Error { .. } => "error",
    }
}

/// Where session `index`'s copy of a configured artifact goes: the first
/// session owns the configured path, later ones insert their ordinal
/// before the extension.
pub fn session_path(base: &Path, index: u64) -> PathBuf {
    if index == 0 {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut name = format!("{stem}.{index}");
    if let Some(ext) = base.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    base.with_file_name(name)
}

/// Persist one wire session's artifacts under the configured paths.
pub fn write_session_artifacts(
    config: &ScenarioConfig,
    index: u64,
    session: &WireSession,
) -> Result<(), ArtifactError> {
    if let Some(path) = &config.output.rounds_log {
        let header = LogHeader::new(
            config.seed,
            config.k_sigma,
            config.rounds,
            config.policy.clone(),
            config.channel,
        );
        artifacts::write_rounds_log(&session_path(path, index), &header, &session.records)?;
    }
    if let Some(path) = &config.output.curve {
        artifacts::write_curve(
            &session_path(path, index),
            config.seed,
            config.k_sigma,
            &config.policy,
            &session.records,
        )?;
    }
    if let Some(path) = &config.output.report {
        if let Ok(report) = &session.outcome {
            artifacts::write_report(
                &session_path(path, index),
                &ReportArtifact::new(Some(config.seed), *report),
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServeSummary {
    pub sessions: u64,
    pub failures: u64,
}

/// Listen on `bind` and serve sessions until `max_sessions` have been
/// accepted (forever when `None`). Prints the bound address as the first
/// line of stdout so callers binding port 0 can find the endpoint.
pub fn serve(
    config: &ScenarioConfig,
    bind: &str,
    max_sessions: Option<u64>,
) -> Result<ServeSummary, ServeError> {
    let listener = TcpListener::bind(bind).map_err(|source| ServeError::Bind {
        addr: bind.to_string(),
        source,
    })?;
    let local = listener.local_addr().map_err(|source| ServeError::Bind {
        addr: bind.to_string(),
        source,
    })?;
    println!("listening on {local}");
    let _ = std::io::stdout().flush();

    let mut summary = ServeSummary {
        sessions: 0,
        failures: 0,
    };
    let mut workers = Vec::new();
    let timeout = Duration::from_secs(config.timeout_secs);

    while max_sessions.map_or(true, |n| summary.sessions < n) {
        let (socket, peer) = listener.accept().map_err(ServeError::Accept)?;
        let index = summary.sessions;
        summary.sessions += 1;
        let config = config.clone();
        workers.push(std::thread::spawn(move || -> Result<bool, ServeError> {
            prepare_socket(&socket, timeout)?;
            let session = drive_session(&socket, &config);
            write_session_artifacts(&config, index, &session).map_err(ServeError::Artifact)?;
            match &session.outcome {
                Ok(_) => Ok(true),
                Err(e) => {
                    eprintln!("session {index} from {peer} failed: {e}");
                    Ok(false)
                }
            }
        }));
    }

    for worker in workers {
        match worker.join() {
            Ok(Ok(true)) => {}
            Ok(Ok(false)) => summary.failures += 1,
            Ok(Err(e)) => return Err(e),
            Err(_) => {
                return Err(ServeError::Internal(
                    "a session worker panicked".to_string(),
                ))
            }
        }
    }
    Ok(summary)
}

fn prepare_socket(socket: &TcpStream, timeout: Duration) -> Result<(), ServeError> {
    socket
        .set_read_timeout(Some(timeout))
        .and_then(|()| socket.set_nodelay(true))
        .map_err(ServeError::Accept)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("accept failed: {0}")]
    Accept(std::io::Error),
    #[error(transparent)]
    Artifact(ArtifactError),
    #[error("{0}")]
    Internal(String),
}
