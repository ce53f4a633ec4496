//! Simulated quantum layer: single-use phase states and Born-rule
//! outcome sampling.
//!
//! The verifier encodes a phase θ into a [`StateHandle`] whose θ field is
//! invisible outside this module — the only θ-dependent datum that ever
//! reaches a prover is a sampled measurement [`Outcome`]. Handles are
//! strictly single-use: consumption is an atomic false→true transition
//! and a second sample attempt always fails, mirroring the fact that a
//! single non-separable state supports exactly one measurement.
//!
//! Outcomes are drawn from a caller-supplied seeded pseudo-random stream.
//! This is a *simulator* of the Born rule for reproducible experiments,
//! not a source of physical randomness.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::metric::Phase;

/// Round identifier; unique per session.
pub type RoundId = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("round id {0} already has a prepared state in this session")]
    DuplicateRound(RoundId),
    #[error("state for round {0} was already measured (single-use)")]
    AlreadyConsumed(RoundId),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("cannot split a zero null probability across {0} extra outcomes")]
    NoNullMass(usize),
}

/// Result of measuring a prepared state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Detection of the x = 1 event.
    One,
    /// Detection of the x = 0 event.
    Zero,
    /// No detection (probability `1 − a − 2b`).
    Null,
}

/// Detection quality of a simulated measurement apparatus: contrast `a`
/// and background `b`, with `a + 2b ≤ 1` so the three outcome
/// probabilities form a distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetectionParams")]
pub struct DetectionParams {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawDetectionParams {
    a: f64,
    #[serde(default)]
    b: f64,
}

impl TryFrom<RawDetectionParams> for DetectionParams {
    type Error = ChannelError;
    fn try_from(raw: RawDetectionParams) -> Result<Self, Self::Error> {
        DetectionParams::new(raw.a, raw.b)
    }
}

impl DetectionParams {
    pub fn new(a: f64, b: f64) -> Result<DetectionParams, ChannelError> {
        if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
            return Err(ChannelError::InvalidMeasurement(format!(
                "contrast and background must be nonnegative finite reals, got a={a}, b={b}"
            )));
        }
        if a + 2.0 * b > 1.0 + 1e-12 {
            return Err(ChannelError::InvalidMeasurement(format!(
                "a + 2b = {} exceeds 1; outcome probabilities would be invalid",
                a + 2.0 * b
            )));
        }
        Ok(DetectionParams { a, b })
    }

    pub fn a(self) -> f64 {
        self.a
    }

    pub fn b(self) -> f64 {
        self.b
    }

    /// Attach a readout phase to form the full measurement model.
    pub fn with_phase(self, phi: Phase) -> MeasurementModel {
        MeasurementModel { a: self.a, b: self.b, phi }
    }
}

/// Three-outcome detection measurement: contrast `a`, background `b`,
/// readout phase `φ`.
///
/// Outcome probabilities at hidden phase θ are
/// `p1 = a·sin²(π(θ−φ)/2) + b`, `p0 = a·cos²(π(θ−φ)/2) + b`, and
/// `pnull = 1 − a − 2b` for the no-detection event.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementModel {
    a: f64,
    b: f64,
    phi: Phase,
}

impl MeasurementModel {
    pub fn new(a: f64, b: f64, phi: Phase) -> Result<MeasurementModel, ChannelError> {
        Ok(DetectionParams::new(a, b)?.with_phase(phi))
    }

    pub fn a(self) -> f64 {
        self.a
    }

    pub fn b(self) -> f64 {
        self.b
    }

    pub fn phi(self) -> Phase {
        self.phi
    }

    /// Probability of the no-detection outcome, independent of θ.
    pub fn p_null(self) -> f64 {
        (1.0 - self.a - 2.0 * self.b).max(0.0)
    }
}

/// Binary projective measurement with fringe contrast `Φ ∈ [0, 1/2]` and
/// readout phase `φ`: `p(Zero) = Φ·cos(π(θ−φ)) + 1/2`.
///
/// `Φ = 1/2` is the ideal phase readout; `Φ = 0` carries no information.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneralProjective {
    contrast: f64,
    phi: Phase,
}

impl GeneralProjective {
    pub fn new(contrast: f64, phi: Phase) -> Result<GeneralProjective, ChannelError> {
        if !contrast.is_finite() || !(0.0..=0.5).contains(&contrast) {
            return Err(ChannelError::InvalidMeasurement(format!(
                "projective contrast must lie in [0, 1/2], got {contrast}"
            )));
        }
        Ok(GeneralProjective { contrast, phi })
    }

    pub fn contrast(self) -> f64 {
        self.contrast
    }

    pub fn phi(self) -> Phase {
        self.phi
    }
}

/// Either measurement family, for code that works uniformly over both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measurement {
    Detection(MeasurementModel),
    Projective(GeneralProjective),
}

/// Probabilities of the three detection outcomes at a given θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeProbs {
    pub one: f64,
    pub zero: f64,
    pub null: f64,
}

impl OutcomeProbs {
    pub fn as_array(self) -> [f64; 3] {
        [self.one, self.zero, self.null]
    }
}

/// Born-rule probabilities of the detection outcomes.
pub fn outcome_probs(theta: Phase, model: &MeasurementModel) -> OutcomeProbs {
    let half_angle = 0.5 * PI * (theta.value() - model.phi.value());
    let s = half_angle.sin().powi(2);
    let c = half_angle.cos().powi(2);
    OutcomeProbs {
        one: model.a * s + model.b,
        zero: model.a * c + model.b,
        // Computed from the parameters, not as 1 − p1 − p0, so it is
        // exactly θ-independent.
        null: model.p_null(),
    }
}

/// Born-rule probability of `Zero` under a general projective readout.
pub fn projective_zero_prob(theta: Phase, g: &GeneralProjective) -> f64 {
    g.contrast * (PI * (theta.value() - g.phi.value())).cos() + 0.5
}

/// A single prepared state `|θ⟩`.
///
/// The hidden phase is private to this module: no accessor, no serde, and
/// the `Debug` form omits it. The handle is consumed (atomically) by the
/// first successful sample.
pub struct StateHandle {
    id: RoundId,
    theta: Phase,
    consumed: AtomicBool,
}

impl StateHandle {
    pub fn id(&self) -> RoundId {
        self.id
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed.load(Ordering::SeqCst)
    }

    /// Flip consumed false→true; error if it already happened.
    fn consume(&self) -> Result<(), ChannelError> {
        if self.consumed.swap(true, Ordering::SeqCst) {
            Err(ChannelError::AlreadyConsumed(self.id))
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for StateHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Deliberately no theta: handles may appear in logs the prover
        // side of a test can read.
        f.debug_struct("StateHandle")
            .field("id", &self.id)
            .field("consumed", &self.is_consumed())
            .finish()
    }
}

/// Per-session state-preparation registry enforcing round-id uniqueness.
#[derive(Debug, Default)]
pub struct Channel {
    prepared: HashSet<RoundId>,
}

impl Channel {
    pub fn new() -> Channel {
        Channel::default()
    }

    /// Prepare `|θ⟩` for one round. Each round id can be prepared once
    /// per session.
    pub fn prepare(&mut self, theta: Phase, id: RoundId) -> Result<StateHandle, ChannelError> {
        if !self.prepared.insert(id) {
            return Err(ChannelError::DuplicateRound(id));
        }
        Ok(StateHandle {
            id,
            theta,
            consumed: AtomicBool::new(false),
        })
    }
}

/// Measure a prepared state with the three-outcome detection model,
/// consuming it.
///
/// The consumption check runs before any randomness is drawn, so a
/// rejected duplicate never advances the sampling stream.
pub fn sample<R: Rng + ?Sized>(
    handle: &StateHandle,
    model: &MeasurementModel,
    rng: &mut R,
) -> Result<Outcome, ChannelError> {
    handle.consume()?;
    let probs = outcome_probs(handle.theta, model);
    let u: f64 = rng.random();
    Ok(if u < probs.one {
        Outcome::One
    } else if u < probs.one + probs.zero {
        Outcome::Zero
    } else {
        Outcome::Null
    })
}

/// Measure a prepared state with a binary projective readout, consuming
/// it. Never yields `Null`.
pub fn sample_general<R: Rng + ?Sized>(
    handle: &StateHandle,
    g: &GeneralProjective,
    rng: &mut R,
) -> Result<Outcome, ChannelError> {
    handle.consume()?;
    let p_zero = projective_zero_prob(handle.theta, g);
    let u: f64 = rng.random();
    Ok(if u < p_zero { Outcome::Zero } else { Outcome::One })
}

/// Detection probabilities with the null mass split uniformly across
/// `extra` θ-independent outcomes: `[p1, p0, pnull/extra × extra]`.
///
/// With `extra = 0` the vector is exactly `outcome_probs`. Splitting a
/// zero null mass is rejected. Because every added outcome has a constant
/// probability, the Fisher information of the extended vector equals that
/// of the collapsed one.
pub fn povm_extended_probs(
    theta: Phase,
    model: &MeasurementModel,
    extra: usize,
) -> Result<Vec<f64>, ChannelError> {
    let probs = outcome_probs(theta, model);
    if extra == 0 {
        return Ok(vec![probs.one, probs.zero, probs.null]);
    }
    if probs.null <= 0.0 {
        return Err(ChannelError::NoNullMass(extra));
    }
    let mut v = Vec::with_capacity(2 + extra);
    v.push(probs.one);
    v.push(probs.zero);
    let share = probs.null / extra as f64;
    v.extend(std::iter::repeat(share).take(extra));
    Ok(v)
}
