//! The two-process protocol: newline-delimited JSON messages, one per
//! line, over any byte stream.
//!
//! The verifier process holds every secret phase and plays the channel
//! physics; the prover only ever sees round ids, its own measurement
//! requests, sampled outcomes, and the final report. That asymmetry is
//! the protocol's trust boundary: outcomes are the only θ-dependent
//! bytes that cross the wire, so a transcript audit can bound what a
//! dishonest prover could have learned.

use std::io::{BufRead, BufReader, Read, Write};

use ecr_core::channel::Outcome;
use ecr_core::channel::RoundId;
use ecr_core::metric::Phase;
use ecr_core::prover::MeasureRequest;
use ecr_core::verifier::CertificationReport;
use serde::{Deserialize, Serialize};

/// Version spoken by this build. Hello messages carrying anything else
/// are refused cleanly.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Verifier,
    Prover,
}

/// Why a party refused or aborted, as carried on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCode {
    /// Second measurement request for the same round. Non-fatal: the
    /// round stays open and is scored from whatever estimate arrives.
    SingleUseViolation,
    /// Out-of-order message kind or unknown round id. Fatal.
    ProtocolViolation,
    /// Hello carried an unsupported protocol version. Fatal.
    VersionMismatch,
    /// The peer took longer than the per-read deadline. Fatal.
    Timeout,
}

impl ErrorCode {
    pub fn is_fatal(self) -> bool {
        !matches!(self, ErrorCode::SingleUseViolation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WireBody {
    /// Opening handshake, sent by both parties (prover first).
    Hello { role: Role },
    /// The verifier has prepared round `round_id`. Carries no phase.
    Challenge { round_id: RoundId },
    /// The prover's single allowed measurement of the round. Carries
    /// only readout parameters chosen by the prover.
    Measure {
        round_id: RoundId,
        request: MeasureRequest,
    },
    /// Born-sampled answer to a Measure.
    Outcome { round_id: RoundId, outcome: Outcome },
    /// The prover's final answer for the round.
    Estimate { round_id: RoundId, estimate: Phase },
    /// Session complete; the verifier's verdict.
    Finish { report: CertificationReport },
    /// Refusal or abort notice.
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        round_id: Option<RoundId>,
        code: ErrorCode,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub version: u32,
    #[serde(flatten)]
    pub body: WireBody,
}

impl WireMessage {
    pub fn new(body: WireBody) -> WireMessage {
        WireMessage {
            version: PROTOCOL_VERSION,
            body,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("wire i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unparseable wire message {line:?}: {source}")]
    Parse {
        line: String,
        source: serde_json::Error,
    },
    #[error("peer closed the stream mid-session")]
    Disconnected,
    #[error("peer speaks protocol version {theirs}, this build speaks {ours}")]
    VersionMismatch { ours: u32, theirs: u32 },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("peer refused: {code:?}: {message}")]
    Refused { code: ErrorCode, message: String },
}

/// One side of a message stream: line-buffered reads, eager writes.
pub struct MessageStream<S: Read + Write> {
    reader: BufReader<S>,
}

impl<S: Read + Write> MessageStream<S> {
    pub fn new(stream: S) -> MessageStream<S> {
        MessageStream {
            reader: BufReader::new(stream),
        }
    }

    pub fn send(&mut self, body: WireBody) -> Result<(), WireError> {
        let msg = WireMessage::new(body);
        let mut line = serde_json::to_string(&msg).expect("wire messages always serialize");
        line.push('\n');
        let stream = self.reader.get_mut();
        stream.write_all(line.as_bytes())?;
        stream.flush()?;
        Ok(())
    }

    /// Read the next message. Version mismatches surface here so every
    /// receive position enforces the handshake invariant.
    pub fn recv(&mut self) -> Result<WireBody, WireError> {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(map_read_err)?;
        if n == 0 {
            return Err(WireError::Disconnected);
        }
        let msg: WireMessage =
            serde_json::from_str(line.trim_end()).map_err(|source| WireError::Parse {
                line: line.trim_end().to_string(),
                source,
            })?;
        if msg.version != PROTOCOL_VERSION {
            return Err(WireError::VersionMismatch {
                ours: PROTOCOL_VERSION,
                theirs: msg.version,
            });
        }
        Ok(msg.body)
    }
}

fn map_read_err(e: std::io::Error) -> WireError {
    match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => WireError::Timeout,
        _ => WireError::Io(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_serialize_one_per_line_with_version_and_kind() {
        let msg = WireMessage::new(WireBody::Challenge { round_id: 7 });
        let text = serde_json::to_string(&msg).unwrap();
        assert_eq!(text, r#"{"version":1,"kind":"challenge","round_id":7}"#);

        let msg = WireMessage::new(WireBody::Measure {
            round_id: 7,
            request: MeasureRequest::Detection { phi: Phase::ZERO },
        });
        let text = serde_json::to_string(&msg).unwrap();
        assert_eq!(
            text,
            r#"{"version":1,"kind":"measure","round_id":7,"request":{"basis":"detection","phi":0.0}}"#
        );

        let msg = WireMessage::new(WireBody::Error {
            round_id: Some(3),
            code: ErrorCode::SingleUseViolation,
            message: "round 3 was already measured".into(),
        });
        let text = serde_json::to_string(&msg).unwrap();
        assert!(text.contains(r#""code":"single-use-violation""#));
    }

    #[test]
    fn round_trip_through_a_buffer() {
        let bodies = [
            WireBody::Hello {
                role: Role::Prover,
            },
            WireBody::Challenge { round_id: 0 },
            WireBody::Outcome {
                round_id: 0,
                outcome: Outcome::Null,
            },
            WireBody::Estimate {
                round_id: 0,
                estimate: Phase::wrap(1.25).unwrap(),
            },
        ];
        let mut bytes = Vec::new();
        for body in &bodies {
            let mut line = serde_json::to_string(&WireMessage::new(body.clone())).unwrap();
            line.push('\n');
            bytes.extend_from_slice(line.as_bytes());
        }
        let mut reader = BufReader::new(bytes.as_slice());
        for body in &bodies {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let msg: WireMessage = serde_json::from_str(line.trim_end()).unwrap();
            assert_eq!(&msg.body, body);
        }
    }

    #[test]
    fn unknown_version_is_detected_at_receive() {
        let line = r#"{"version":2,"kind":"hello","role":"prover"}"#;
        let msg: WireMessage = serde_json::from_str(line).unwrap();
        assert_eq!(msg.version, 2);
        // MessageStream::recv refuses it.
        struct Duplex(std::io::Cursor<Vec<u8>>);
        impl Read for Duplex {
            fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
                self.0.read(buf)
            }
        }
        impl Write for Duplex {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let mut stream =
            MessageStream::new(Duplex(std::io::Cursor::new(format!("{line}\n").into_bytes())));
        match stream.recv() {
            Err(WireError::VersionMismatch { ours: 1, theirs: 2 }) => {}
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn only_the_single_use_code_is_survivable() {
        assert!(!ErrorCode::SingleUseViolation.is_fatal());
        assert!(ErrorCode::ProtocolViolation.is_fatal());
        assert!(ErrorCode::VersionMismatch.is_fatal());
        assert!(ErrorCode::Timeout.is_fatal());
    }
}
