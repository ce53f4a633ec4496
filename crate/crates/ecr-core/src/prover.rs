//! Prover strategies: θ-blind procedures that produce a phase estimate
//! each round, with or without measuring the round's state.
//!
//! Strategies interact with the world only through [`RoundAccess`], whose
//! single method answers a measurement request with an outcome. Nothing
//! in the signature carries θ, so θ-blindness is structural: a strategy's
//! output is a function of its own state and the outcomes it receives.
//!
//! The deterministic strategy replays the fractional binary digits of
//! e^π — an arbitrary fixed bit sequence with no relation to the
//! verifier's phases — optionally through a block permutation. The
//! measure-and-map strategy performs the optimal single measurement and
//! maps outcome x to the estimate `(φ + x) mod 2`, falling back to the
//! deterministic bits when no detection occurs.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channel::{MeasurementModel, Outcome};
use crate::metric::Phase;
use crate::oracles::EstimatorMap;

/// Fractional binary digits of e^π shipped with the crate (2^17 bits).
///
/// The constant is stored as hex in `epi_frac.hex` and cross-validated by
/// an independent arbitrary-precision computation in the test suite.
pub const EPI_FRACTION_BITS: usize = 131_072;

const EPI_FRAC_HEX: &str = include_str!("epi_frac.hex");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProverError {
    #[error("requested {requested} digits of e^π but only {EPI_FRACTION_BITS} are stored")]
    DigitsOutOfRange { requested: usize },
    #[error("invalid bit source: {0}")]
    InvalidBitSource(String),
    #[error("measurement rejected: {0}")]
    MeasurementRejected(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

fn epi_table() -> &'static [u8] {
    static TABLE: OnceLock<Vec<u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut bits = Vec::with_capacity(EPI_FRACTION_BITS);
        for ch in EPI_FRAC_HEX.trim().chars() {
            let nibble = ch.to_digit(16).unwrap_or_else(|| {
                panic!("corrupt e^π constant: non-hex character {ch:?}")
            });
            for shift in (0..4).rev() {
                bits.push(((nibble >> shift) & 1) as u8);
            }
        }
        assert_eq!(bits.len(), EPI_FRACTION_BITS, "corrupt e^π constant length");
        bits
    })
}

/// First `n` fractional binary digits of e^π ≈ 23.140692632779…
///
/// Only the stored precision is served; asking beyond it is an error
/// rather than a silent wrap (streams that need unbounded bits cycle
/// explicitly via [`BitStream`]).
pub fn epi_bits(n: usize) -> Result<&'static [u8], ProverError> {
    if n > EPI_FRACTION_BITS {
        return Err(ProverError::DigitsOutOfRange { requested: n });
    }
    Ok(&epi_table()[..n])
}

/// Declarative bit-sequence source for deterministic estimates and
/// null-outcome fallbacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BitSourceSpec {
    /// Fractional binary digits of e^π, optionally re-ordered blockwise
    /// by a fixed index permutation (identity when absent).
    EPiDigits {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        permutation: Option<Vec<u32>>,
    },
    /// A caller-supplied bit list, replayed cyclically.
    ExplicitList { bits: Vec<u8> },
}

impl BitSourceSpec {
    /// The unpermuted e^π digit stream.
    pub fn epi_identity() -> BitSourceSpec {
        BitSourceSpec::EPiDigits { permutation: None }
    }
}

/// A validated, positioned bit stream.
///
/// Streams are infinite: the e^π source cycles after its stored
/// `EPI_FRACTION_BITS` digits and explicit lists cycle after their length.
/// A permutation of length L reorders every consecutive L-digit block.
#[derive(Clone, Debug)]
pub struct BitStream {
    spec: BitSourceSpec,
    cursor: u64,
}

impl BitStream {
    pub fn new(spec: BitSourceSpec) -> Result<BitStream, ProverError> {
        match &spec {
            BitSourceSpec::EPiDigits { permutation: Some(perm) } => {
                validate_permutation(perm)?;
            }
            BitSourceSpec::EPiDigits { permutation: None } => {}
            BitSourceSpec::ExplicitList { bits } => {
                if bits.is_empty() {
                    return Err(ProverError::InvalidBitSource(
                        "explicit bit list is empty".into(),
                    ));
                }
                if let Some(bad) = bits.iter().find(|&&b| b > 1) {
                    return Err(ProverError::InvalidBitSource(format!(
                        "bit values must be 0 or 1, got {bad}"
                    )));
                }
            }
        }
        Ok(BitStream { spec, cursor: 0 })
    }

    /// Next bit of the stream (always 0 or 1).
    pub fn next_bit(&mut self) -> u8 {
        let i = self.cursor;
        self.cursor += 1;
        match &self.spec {
            BitSourceSpec::EPiDigits { permutation } => {
                let table = epi_table();
                let idx = match permutation {
                    None => (i % table.len() as u64) as usize,
                    Some(perm) => {
                        let block_len = perm.len() as u64;
                        let base = (i / block_len) * block_len;
                        let offset = perm[(i % block_len) as usize] as u64;
                        ((base + offset) % table.len() as u64) as usize
                    }
                };
                table[idx]
            }
            BitSourceSpec::ExplicitList { bits } => bits[(i % bits.len() as u64) as usize],
        }
    }

    /// Next bit converted to a radix-2 phase estimate (0 or 1).
    pub fn next_bit_phase(&mut self) -> Phase {
        if self.next_bit() == 1 {
            Phase::ONE
        } else {
            Phase::ZERO
        }
    }
}

fn validate_permutation(perm: &[u32]) -> Result<(), ProverError> {
    if perm.is_empty() {
        return Err(ProverError::InvalidBitSource("permutation is empty".into()));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        let i = p as usize;
        if i >= perm.len() || seen[i] {
            return Err(ProverError::InvalidBitSource(format!(
                "index map is not a permutation of 0..{}",
                perm.len()
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

/// A measurement request as a prover may phrase it: the basis phases
/// only. Detection quality (a, b) belongs to the channel being measured,
/// not to the request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "kebab-case")]
pub enum MeasureRequest {
    /// Three-outcome detection readout at phase φ.
    Detection { phi: Phase },
    /// Binary projective readout with fringe contrast Φ at phase φ.
    Projective { contrast: f64, phi: Phase },
}

/// The prover's view of one protocol round: at most one measurement.
///
/// Implementations decide what physically answers the request (an
/// in-process Born sample, a wire round-trip, a test stub); none of them
/// expose θ.
pub trait RoundAccess {
    fn measure(&mut self, request: MeasureRequest) -> Result<Outcome, ProverError>;
}

/// An estimation strategy, holding whatever stream position it needs
/// across rounds. One instance serves one session sequentially.
#[derive(Clone, Debug)]
pub enum Strategy {
    /// Never measures; replays a fixed bit sequence as estimates.
    DeterministicSequence { bits: BitStream },
    /// Measures once per round and maps outcome x to `(φ + x) mod 2`;
    /// a null outcome falls back to the next deterministic bit.
    MeasureAndMap {
        model: MeasurementModel,
        fallback: BitStream,
    },
    /// Measures once per round and applies an arbitrary outcome→phase map.
    GeneralEstimator {
        request: MeasureRequest,
        map: EstimatorMap,
    },
}

impl Strategy {
    /// Produce the estimate for the current round.
    ///
    /// `DeterministicSequence` never touches `round`; the measuring
    /// strategies call `measure` exactly once.
    pub fn next_estimate(&mut self, round: &mut dyn RoundAccess) -> Result<Phase, ProverError> {
        match self {
            Strategy::DeterministicSequence { bits } => Ok(bits.next_bit_phase()),
            Strategy::MeasureAndMap { model, fallback } => {
                let phi = model.phi();
                let outcome = round.measure(MeasureRequest::Detection { phi })?;
                Ok(match outcome {
                    Outcome::One => phi_plus_x(phi, 1),
                    Outcome::Zero => phi,
                    Outcome::Null => fallback.next_bit_phase(),
                })
            }
            Strategy::GeneralEstimator { request, map } => {
                let outcome = round.measure(*request)?;
                Ok(map.estimate_for(outcome))
            }
        }
    }
}

/// `(φ + x) mod 2` for x ∈ {0, 1}.
fn phi_plus_x(phi: Phase, x: u8) -> Phase {
    if x == 0 {
        phi
    } else {
        phi.antipode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Phase;

    struct Scripted {
        outcomes: Vec<Outcome>,
        served: usize,
    }

    impl Scripted {
        fn new(outcomes: Vec<Outcome>) -> Scripted {
            Scripted { outcomes, served: 0 }
        }
    }

    impl RoundAccess for Scripted {
        fn measure(&mut self, _request: MeasureRequest) -> Result<Outcome, ProverError> {
            let out = self.outcomes[self.served % self.outcomes.len()];
            self.served += 1;
            Ok(out)
        }
    }

    fn p(v: f64) -> Phase {
        Phase::wrap(v).unwrap()
    }

    #[test]
    fn epi_prefix_matches_reference_expansion() {
        assert_eq!(epi_bits(8).unwrap(), &[0, 0, 1, 0, 0, 1, 0, 0]);
        assert_eq!(epi_bits(0).unwrap(), &[] as &[u8]);
        // Prefix consistency.
        let long = epi_bits(16).unwrap();
        assert_eq!(&long[..8], epi_bits(8).unwrap());
    }

    #[test]
    fn epi_bits_rejects_beyond_stored_precision() {
        assert!(epi_bits(EPI_FRACTION_BITS).is_ok());
        assert_eq!(
            epi_bits(EPI_FRACTION_BITS + 1).unwrap_err(),
            ProverError::DigitsOutOfRange {
                requested: EPI_FRACTION_BITS + 1
            }
        );
    }

    #[test]
    fn bit_stream_permutation_reorders_blockwise() {
        let mut plain = BitStream::new(BitSourceSpec::epi_identity()).unwrap();
        let mut swapped = BitStream::new(BitSourceSpec::EPiDigits {
            permutation: Some(vec![1, 0]),
        })
        .unwrap();
        let a: Vec<u8> = (0..8).map(|_| plain.next_bit()).collect();
        let b: Vec<u8> = (0..8).map(|_| swapped.next_bit()).collect();
        assert_eq!(b, vec![a[1], a[0], a[3], a[2], a[5], a[4], a[7], a[6]]);
    }

    #[test]
    fn bit_stream_rejects_malformed_sources() {
        assert!(BitStream::new(BitSourceSpec::EPiDigits {
            permutation: Some(vec![0, 0, 1]),
        })
        .is_err());
        assert!(BitStream::new(BitSourceSpec::EPiDigits {
            permutation: Some(vec![2, 0]),
        })
        .is_err());
        assert!(BitStream::new(BitSourceSpec::ExplicitList { bits: vec![] }).is_err());
        assert!(BitStream::new(BitSourceSpec::ExplicitList { bits: vec![0, 2] }).is_err());
    }

    #[test]
    fn explicit_list_cycles() {
        let mut stream = BitStream::new(BitSourceSpec::ExplicitList {
            bits: vec![1, 0, 0],
        })
        .unwrap();
        let got: Vec<u8> = (0..7).map(|_| stream.next_bit()).collect();
        assert_eq!(got, vec![1, 0, 0, 1, 0, 0, 1]);
    }

    #[test]
    fn measure_and_map_follows_the_phase_map() {
        let model = MeasurementModel::new(1.0, 0.0, Phase::ZERO).unwrap();
        let mut strategy = Strategy::MeasureAndMap {
            model,
            fallback: BitStream::new(BitSourceSpec::epi_identity()).unwrap(),
        };
        let mut round = Scripted::new(vec![Outcome::One]);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), Phase::ONE);

        let model_half = MeasurementModel::new(1.0, 0.0, p(0.5)).unwrap();
        let mut strategy = Strategy::MeasureAndMap {
            model: model_half,
            fallback: BitStream::new(BitSourceSpec::epi_identity()).unwrap(),
        };
        let mut round = Scripted::new(vec![Outcome::One]);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), p(1.5));
        let mut round = Scripted::new(vec![Outcome::Zero]);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), p(0.5));
    }

    #[test]
    fn null_outcome_takes_the_fallback_bit() {
        let model = MeasurementModel::new(0.5, 0.1, Phase::ZERO).unwrap();
        let mut strategy = Strategy::MeasureAndMap {
            model,
            // e^π starts 0, 0, 1, …
            fallback: BitStream::new(BitSourceSpec::epi_identity()).unwrap(),
        };
        let mut round = Scripted::new(vec![Outcome::Null]);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), Phase::ZERO);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), Phase::ZERO);
        assert_eq!(strategy.next_estimate(&mut round).unwrap(), Phase::ONE);
    }

    #[test]
    fn measuring_strategies_ask_exactly_once_per_round() {
        let model = MeasurementModel::new(0.5, 0.1, Phase::ZERO).unwrap();
        let mut strategy = Strategy::MeasureAndMap {
            model,
            fallback: BitStream::new(BitSourceSpec::epi_identity()).unwrap(),
        };
        let mut round = Scripted::new(vec![Outcome::Zero]);
        for _ in 0..10 {
            strategy.next_estimate(&mut round).unwrap();
        }
        assert_eq!(round.served, 10);
    }
}
