//! Prover-side wire endpoint: connects to a verifier, answers its
//! challenges with the configured strategy, and collects the verdict.
//!
//! The client never learns a phase it did not estimate itself: the only
//! verifier data it sees are round ids, sampled outcomes, and the final
//! report.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::time::Duration;

use ecr_core::channel::{Outcome, RoundId};
use ecr_core::prover::{MeasureRequest, ProverError, RoundAccess, Strategy};
use ecr_core::verifier::CertificationReport;

use crate::artifacts::{self, ArtifactError, ReportArtifact};
use crate::config::ScenarioConfig;
use crate::wire::{MessageStream, Role, WireBody, WireError};

/// One round as the strategy sees it: measurement requests become wire
/// round-trips.
struct WireRound<'a, S: Read + Write> {
    stream: &'a mut MessageStream<S>,
    round_id: RoundId,
    /// Wire-level failure preserved across the `ProverError` boundary.
    failure: Option<WireError>,
}

impl<S: Read + Write> RoundAccess for WireRound<'_, S> {
    fn measure(&mut self, request: MeasureRequest) -> Result<Outcome, ProverError> {
        let fail = |this: &mut Self, e: WireError| -> ProverError {
            let text = e.to_string();
            this.failure = Some(e);
            ProverError::Transport(text)
        };
        if let Err(e) = self.stream.send(WireBody::Measure {
            round_id: self.round_id,
            request,
        }) {
            return Err(fail(self, e));
        }
        match self.stream.recv() {
            Ok(WireBody::Outcome { round_id, outcome }) if round_id == self.round_id => {
                Ok(outcome)
            }
            Ok(WireBody::Outcome { round_id, .. }) => Err(fail(
                self,
                WireError::Protocol(format!(
                    "outcome for round {round_id} while round {} is active",
                    self.round_id
                )),
            )),
            Ok(WireBody::Error { code, message, .. }) if !code.is_fatal() => {
                // The verifier refused a repeat measurement but keeps the
                // round open; surface that to the strategy as a rejection.
                Err(ProverError::MeasurementRejected(message))
            }
            Ok(WireBody::Error { code, message, .. }) => {
                Err(fail(self, WireError::Refused { code, message }))
            }
            Ok(other) => Err(fail(
                self,
                WireError::Protocol(format!(
                    "expected an outcome for round {}, got {other:?}",
                    self.round_id
                )),
            )),
            Err(e) => Err(fail(self, e)),
        }
    }
}

/// Play a full session over any byte stream.
pub fn run<S: Read + Write>(
    stream: S,
    strategy: &mut Strategy,
) -> Result<CertificationReport, WireError> {
    let mut stream = MessageStream::new(stream);
    stream.send(WireBody::Hello { role: Role::Prover })?;
    match stream.recv()? {
        WireBody::Hello {
            role: Role::Verifier,
        } => {}
        WireBody::Error { code, message, .. } => {
            return Err(WireError::Refused { code, message })
        }
        other => {
            return Err(WireError::Protocol(format!(
                "expected the verifier's hello, got {other:?}"
            )))
        }
    }

    loop {
        match stream.recv()? {
            WireBody::Challenge { round_id } => {
                let mut round = WireRound {
                    stream: &mut stream,
                    round_id,
                    failure: None,
                };
                match strategy.next_estimate(&mut round) {
                    Ok(estimate) => {
                        stream.send(WireBody::Estimate { round_id, estimate })?;
                    }
                    Err(e) => {
                        return Err(round
                            .failure
                            .unwrap_or_else(|| {
                                WireError::Protocol(format!("prover strategy failed: {e}"))
                            }))
                    }
                }
            }
            WireBody::Finish { report } => return Ok(report),
            WireBody::Error { code, message, .. } => {
                return Err(WireError::Refused { code, message })
            }
            other => {
                return Err(WireError::Protocol(format!(
                    "unexpected message from the verifier: {other:?}"
                )))
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot connect to {addr}: {source}")]
    Connect {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

/// Connect to a verifier over TCP, play the configured strategy, and
/// optionally save the received report (without a seed — the prover does
/// not know it).
pub fn prove_over_tcp(
    addr: &str,
    config: &ScenarioConfig,
    strategy: &mut Strategy,
    report_path: Option<&Path>,
) -> Result<CertificationReport, ClientError> {
    let socket = TcpStream::connect(addr).map_err(|source| ClientError::Connect {
        addr: addr.to_string(),
        source,
    })?;
    socket
        .set_read_timeout(Some(Duration::from_secs(config.timeout_secs)))
        .and_then(|()| socket.set_nodelay(true))
        .map_err(|source| ClientError::Connect {
            addr: addr.to_string(),
            source,
        })?;
    let report = run(&socket, strategy)?;
    if let Some(path) = report_path {
        artifacts::write_report(path, &ReportArtifact::new(None, report))?;
    }
    Ok(report)
}
