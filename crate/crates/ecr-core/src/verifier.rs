//! Verifier side of the protocol: phase selection, round bookkeeping,
//! scoring, and the certification decision.
//!
//! A session runs a fixed number of rounds. Each round the verifier draws
//! a secret phase θ from the configured selection policy, prepares the
//! single-use state, answers at most one measurement request, and records
//! the prover's estimate together with its squared error. After the last
//! round the aggregate error is compared against the blind baseline: any
//! θ-independent estimation procedure has expected squared error exactly
//! `diameter²/2` per round, with a known per-round variance, so a
//! sufficiently large deviation in either direction is statistical proof
//! that the estimates depend on the secret phases — which is exactly the
//! event that cannot be produced by any deterministic (pre-programmed)
//! box, and therefore certifies fresh randomness in the transcript.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    sample, sample_general, Channel, ChannelError, DetectionParams, GeneralProjective, Outcome,
    RoundId, StateHandle,
};
use crate::metric::{AntipodalMetric, MetricError, Phase, Prior, PriorSpec};
use crate::prover::{MeasureRequest, ProverError, RoundAccess, Strategy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifierError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("round {got} is not the active round ({expected:?})")]
    WrongRound { got: RoundId, expected: Option<RoundId> },
    #[error("a round is already in progress: {0}")]
    RoundInProgress(RoundId),
    #[error("all {0} rounds of the session were already issued")]
    RoundsExhausted(u64),
    #[error("no active round awaits an estimate")]
    NoActiveRound,
    #[error("session incomplete: {done} of {total} rounds estimated")]
    Incomplete { done: u64, total: u64 },
    #[error("round log is empty")]
    EmptyLog,
    #[error("round {index}: stored squared error {stored} disagrees with {computed} recomputed from θ and the estimate")]
    CorruptRecord { index: u64, stored: f64, computed: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// How the verifier draws the secret phase of each round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SelectionPolicy {
    /// Independent uniform draws from the whole circle.
    IidContinuousUniform,
    /// Independent uniform draws from the `n`-point grid at offset ε.
    IidGrid {
        n: u32,
        #[serde(default)]
        epsilon: f64,
    },
    /// Deterministic cycling through the grid in index order — useful for
    /// exactly balanced designs; consumes no selection randomness.
    RoundRobinGrid {
        n: u32,
        #[serde(default)]
        epsilon: f64,
    },
}

impl SelectionPolicy {
    /// The prior a blind prover faces under this policy.
    ///
    /// Round-robin cycling yields the same per-round marginal as iid grid
    /// sampling, and the certification statistics depend on the marginal
    /// only (squared errors of a θ-blind prover are independent across
    /// rounds in both cases, with identical mean and variance).
    pub fn prior_spec(&self) -> PriorSpec {
        match *self {
            SelectionPolicy::IidContinuousUniform => PriorSpec::ContinuousUniform,
            SelectionPolicy::IidGrid { n, epsilon }
            | SelectionPolicy::RoundRobinGrid { n, epsilon } => PriorSpec::Grid { n, epsilon },
        }
    }

    /// Draw the phase for `round_index`. Only the iid policies consume
    /// randomness; round-robin is a pure function of the index.
    pub fn select_theta<R: Rng + ?Sized>(
        &self,
        round_index: u64,
        rng: &mut R,
    ) -> Result<Phase, MetricError> {
        match *self {
            SelectionPolicy::IidContinuousUniform => Phase::wrap(2.0 * rng.random::<f64>()),
            SelectionPolicy::IidGrid { n, epsilon } => {
                let k = rng.random_range(0..n);
                Phase::wrap(epsilon + 2.0 * k as f64 / n as f64)
            }
            SelectionPolicy::RoundRobinGrid { n, epsilon } => {
                let k = (round_index % n as u64) as f64;
                Phase::wrap(epsilon + 2.0 * k / n as f64)
            }
        }
    }
}

/// One scored round of a finished (or aborted) session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: u64,
    pub theta: Phase,
    pub estimate: Phase,
    pub sq_err: f64,
}

/// Mean of the recorded squared errors (compensated summation, so the
/// result is deterministic and accurate at any session length).
pub fn posterior_mse(records: &[RoundRecord]) -> Result<f64, VerifierError> {
    if records.is_empty() {
        return Err(VerifierError::EmptyLog);
    }
    Ok(kahan_mean(records.iter().map(|r| r.sq_err)))
}

fn kahan_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut count = 0u64;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        count += 1;
    }
    sum / count as f64
}

/// Worst-case per-round variance of the squared error of a θ-independent
/// estimation procedure, over all such procedures.
///
/// Writing `S = d(θ, θ̂)²` with θ from the prior and θ̂ from any
/// independent estimate distribution, `E[S] = diameter²/2` always (the
/// antipodal pairing), and
/// `E[S²]/diameter⁴ = 3/8 − ½·Re[H₁e^{−iπθ̂}] + ⅛·Re[H₂e^{−2iπθ̂}]`,
/// where `H_k = E_prior[e^{ikπθ}]`. Antipodal symmetry forces `H₁ = 0`,
/// so the variance is `diameter⁴·(1 + |H₂|)/8` at worst — the maximum
/// over point estimates bounds every mixture. Both uniform priors
/// (continuous, and any grid with ≥ 3 points) have `H₂ = 0`, giving
/// exactly `diameter⁴/8` for *every* blind procedure, not just the worst.
pub fn null_variance(prior: &Prior, m: AntipodalMetric) -> Result<f64, VerifierError> {
    let d4 = m.diameter().powi(4);
    match prior {
        Prior::ContinuousUniform => Ok(d4 / 8.0),
        Prior::Discrete(support) => {
            let (mut re1, mut im1, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
            for &(theta, w) in support {
                let t = theta.value();
                re1 += w * (PI * t).cos();
                im1 += w * (PI * t).sin();
                re2 += w * (2.0 * PI * t).cos();
                im2 += w * (2.0 * PI * t).sin();
            }
            let h1 = (re1 * re1 + im1 * im1).sqrt();
            if h1 > 1e-9 {
                return Err(VerifierError::InvalidConfig(format!(
                    "prior is not mean-balanced: |E[exp(iπθ)]| = {h1:e}, \
                     so the blind baseline diameter²/2 does not hold"
                )));
            }
            let h2 = (re2 * re2 + im2 * im2).sqrt();
            Ok(d4 * (1.0 + h2) / 8.0)
        }
    }
}

/// Certification verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    /// The transcript's error statistics cannot come from any θ-blind
    /// procedure (at the configured significance).
    CertifiedRandom,
    /// The deviation from the blind baseline is not significant.
    NotCertified,
}

/// Which side of the blind baseline a significant deviation fell on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Significantly below `diameter²/2`: the prover estimates better
    /// than blind chance (the honest quantum signature).
    Below,
    /// Significantly above `diameter²/2`: anti-correlated estimates —
    /// still impossible without θ-dependence, so still certifying.
    Above,
    /// Within the significance band.
    Within,
}

/// Outcome of scoring a complete session.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    /// Number of scored rounds.
    pub n: u64,
    /// Mean squared error over the session.
    pub mse: f64,
    /// Blind baseline `diameter²/2`.
    pub null_mean: f64,
    /// Worst-case per-round variance of a blind procedure's squared error.
    pub null_var: f64,
    /// Standardized deviation `(mse − null_mean)·√(n / null_var)`.
    pub z: f64,
    /// Two-sided significance threshold in standard deviations.
    pub k_sigma: f64,
    pub decision: Decision,
    pub direction: Direction,
    /// Ceiling on the certifiable randomness of the transcript: half a
    /// bit per round, `n/2`, reported unconditionally. The transcript
    /// actually carries that much certified entropy only when the
    /// decision is `CertifiedRandom`; the bound is never exceeded either
    /// way.
    pub entropy_bound_bits: f64,
}

/// Score a round log against the blind baseline.
///
/// Every record's stored squared error is first re-derived from its
/// (θ, estimate) pair — a log that disagrees with its own metric is
/// rejected, which is what makes independent re-scoring of an archived
/// session meaningful.
pub fn certify(
    records: &[RoundRecord],
    k_sigma: f64,
    prior: &Prior,
    m: AntipodalMetric,
) -> Result<CertificationReport, VerifierError> {
    if !k_sigma.is_finite() || k_sigma <= 0.0 {
        return Err(VerifierError::InvalidConfig(format!(
            "significance threshold must be a positive real, got {k_sigma}"
        )));
    }
    for r in records {
        let computed = m.sq_distance(r.theta, r.estimate);
        if (computed - r.sq_err).abs() > 1e-12 {
            return Err(VerifierError::CorruptRecord {
                index: r.index,
                stored: r.sq_err,
                computed,
            });
        }
    }
    let mse = posterior_mse(records)?;
    let n = records.len() as u64;
    let null_mean = 0.5 * m.diameter() * m.diameter();
    let variance = null_variance(prior, m)?;
    let z = (mse - null_mean) * (n as f64 / variance).sqrt();
    let direction = if z <= -k_sigma {
        Direction::Below
    } else if z >= k_sigma {
        Direction::Above
    } else {
        Direction::Within
    };
    let decision = if direction == Direction::Within {
        Decision::NotCertified
    } else {
        Decision::CertifiedRandom
    };
    Ok(CertificationReport {
        n,
        mse,
        null_mean,
        null_var: variance,
        z,
        k_sigma,
        decision,
        direction,
        entropy_bound_bits: n as f64 / 2.0,
    })
}

struct ActiveRound {
    id: RoundId,
    theta: Phase,
    handle: StateHandle,
}

/// The verifier's session state machine.
///
/// Rounds are strictly sequential: `begin_round` issues the next round id
/// and secretly prepares its state; the prover may then `measure` that
/// round at most once and must `submit_estimate` for it before the next
/// round can begin. θ never appears in any return value until the round
/// is scored (it is published in the [`RoundRecord`] only after the
/// estimate is locked in).
///
/// Phase selection and outcome sampling run on independent streams of one
/// seeded generator, so the sampled outcomes of round `i` do not depend
/// on *how many* random draws phase selection performed — transports that
/// interleave the two differently still replay identically.
pub struct SessionEngine {
    policy: SelectionPolicy,
    prior: Prior,
    detection: DetectionParams,
    metric: AntipodalMetric,
    rounds: u64,
    k_sigma: f64,
    theta_rng: ChaCha12Rng,
    sample_rng: ChaCha12Rng,
    channel: Channel,
    active: Option<ActiveRound>,
    issued: u64,
    records: Vec<RoundRecord>,
}

impl SessionEngine {
    /// Streams of the session generator: 1 selects phases, 2 samples
    /// outcomes.
    const THETA_STREAM: u64 = 1;
    const SAMPLE_STREAM: u64 = 2;

    pub fn new(
        policy: SelectionPolicy,
        detection: DetectionParams,
        rounds: u64,
        seed: u64,
        k_sigma: f64,
    ) -> Result<SessionEngine, VerifierError> {
        if rounds == 0 {
            return Err(VerifierError::InvalidConfig(
                "a session needs at least one round".into(),
            ));
        }
        if !k_sigma.is_finite() || k_sigma <= 0.0 {
            return Err(VerifierError::InvalidConfig(format!(
                "significance threshold must be a positive real, got {k_sigma}"
            )));
        }
        let prior = policy.prior_spec().validate()?;
        // Reject priors the baseline arithmetic does not hold for, before
        // any round runs.
        null_variance(&prior, AntipodalMetric::unit())?;
        let mut theta_rng = ChaCha12Rng::seed_from_u64(seed);
        theta_rng.set_stream(Self::THETA_STREAM);
        let mut sample_rng = ChaCha12Rng::seed_from_u64(seed);
        sample_rng.set_stream(Self::SAMPLE_STREAM);
        Ok(SessionEngine {
            policy,
            prior,
            detection,
            metric: AntipodalMetric::unit(),
            rounds,
            k_sigma,
            theta_rng,
            sample_rng,
            channel: Channel::new(),
            active: None,
            issued: 0,
            records: Vec::with_capacity(rounds as usize),
        })
    }

    pub fn total_rounds(&self) -> u64 {
        self.rounds
    }

    pub fn completed_rounds(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn k_sigma(&self) -> f64 {
        self.k_sigma
    }

    pub fn policy(&self) -> &SelectionPolicy {
        &self.policy
    }

    /// Issue the next round: select its secret phase and prepare the
    /// state. Returns only the round id.
    pub fn begin_round(&mut self) -> Result<RoundId, VerifierError> {
        if let Some(active) = &self.active {
            return Err(VerifierError::RoundInProgress(active.id));
        }
        if self.issued == self.rounds {
            return Err(VerifierError::RoundsExhausted(self.rounds));
        }
        let id = self.issued;
        let theta = self.policy.select_theta(id, &mut self.theta_rng)?;
        let handle = self.channel.prepare(theta, id)?;
        self.active = Some(ActiveRound { id, theta, handle });
        self.issued += 1;
        Ok(id)
    }

    /// Answer a measurement request against the active round's state.
    ///
    /// A second request for the same round fails with the single-use
    /// error and changes nothing — the round still awaits its estimate.
    pub fn measure(
        &mut self,
        round_id: RoundId,
        request: MeasureRequest,
    ) -> Result<Outcome, VerifierError> {
        let active = self.active.as_ref().ok_or(VerifierError::WrongRound {
            got: round_id,
            expected: None,
        })?;
        if active.id != round_id {
            return Err(VerifierError::WrongRound {
                got: round_id,
                expected: Some(active.id),
            });
        }
        let outcome = match request {
            MeasureRequest::Detection { phi } => {
                let model = self.detection.with_phase(phi);
                sample(&active.handle, &model, &mut self.sample_rng)?
            }
            MeasureRequest::Projective { contrast, phi } => {
                let readout = GeneralProjective::new(contrast, phi)?;
                sample_general(&active.handle, &readout, &mut self.sample_rng)?
            }
        };
        Ok(outcome)
    }

    /// Lock in the estimate for the active round and score it.
    pub fn submit_estimate(
        &mut self,
        round_id: RoundId,
        estimate: Phase,
    ) -> Result<(), VerifierError> {
        let active = self.active.as_ref().ok_or(VerifierError::NoActiveRound)?;
        if active.id != round_id {
            return Err(VerifierError::WrongRound {
                got: round_id,
                expected: Some(active.id),
            });
        }
        let active = self.active.take().expect("checked above");
        let sq_err = self.metric.sq_distance(active.theta, estimate);
        self.records.push(RoundRecord {
            index: active.id,
            theta: active.theta,
            estimate,
            sq_err,
        });
        Ok(())
    }

    /// Certify the finished session. Errors while rounds remain open.
    pub fn report(&self) -> Result<CertificationReport, VerifierError> {
        if self.active.is_some() || self.issued != self.rounds {
            return Err(VerifierError::Incomplete {
                done: self.completed_rounds(),
                total: self.rounds,
            });
        }
        certify(&self.records, self.k_sigma, &self.prior, self.metric)
    }

    /// Surrender the round log — complete or partial.
    pub fn into_records(self) -> Vec<RoundRecord> {
        self.records
    }
}

/// A completed in-process session: the full scored log and its verdict.
#[derive(Clone, Debug)]
pub struct SessionOutput {
    pub records: Vec<RoundRecord>,
    pub report: CertificationReport,
}

/// Cause of a session abort.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionAbort {
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Prover(#[from] ProverError),
}

/// A session abort carrying the rounds that *did* complete, so partial
/// logs survive transport failures and misbehaving strategies.
#[derive(Debug, Clone, thiserror::Error)]
#[error("session aborted after {} completed rounds: {cause}", records.len())]
pub struct SessionError {
    pub records: Vec<RoundRecord>,
    #[source]
    pub cause: SessionAbort,
}

struct EngineRound<'a> {
    engine: &'a mut SessionEngine,
    id: RoundId,
}

impl RoundAccess for EngineRound<'_> {
    fn measure(&mut self, request: MeasureRequest) -> Result<Outcome, ProverError> {
        self.engine
            .measure(self.id, request)
            .map_err(|e| ProverError::MeasurementRejected(e.to_string()))
    }
}

/// Run a full session in-process: the engine plays verifier, `strategy`
/// plays prover, with the same round discipline a wire transport uses.
pub fn run_session(
    policy: SelectionPolicy,
    strategy: &mut Strategy,
    detection: DetectionParams,
    rounds: u64,
    seed: u64,
    k_sigma: f64,
) -> Result<SessionOutput, SessionError> {
    let mut engine = match SessionEngine::new(policy, detection, rounds, seed, k_sigma) {
        Ok(engine) => engine,
        Err(e) => {
            return Err(SessionError {
                records: Vec::new(),
                cause: e.into(),
            })
        }
    };
    match drive(&mut engine, strategy, rounds) {
        Ok(()) => match engine.report() {
            Ok(report) => Ok(SessionOutput {
                records: engine.into_records(),
                report,
            }),
            Err(e) => Err(SessionError {
                records: engine.into_records(),
                cause: e.into(),
            }),
        },
        Err(cause) => Err(SessionError {
            records: engine.into_records(),
            cause,
        }),
    }
}

fn drive(
    engine: &mut SessionEngine,
    strategy: &mut Strategy,
    rounds: u64,
) -> Result<(), SessionAbort> {
    for _ in 0..rounds {
        let id = engine.begin_round()?;
        let estimate = {
            let mut round = EngineRound { engine, id };
            strategy.next_estimate(&mut round)?
        };
        engine.submit_estimate(id, estimate)?;
    }
    Ok(())
}
