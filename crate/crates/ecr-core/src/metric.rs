//! Antipodal metric geometry over phases, antipodal priors, and exact
//! EMSE (expected mean squared error) computation.
//!
//! Phases live on the circle `[0, 2)` in units of π radians. The distance
//! between two phases is `diameter · |sin(π(x − y)/2)|` — half the
//! Euclidean chord length between the corresponding points of the unit
//! circle, scaled to the configured diameter. Every point `x` has an
//! antipode `x + 1 (mod 2)` satisfying the antipodal Pythagoras identity
//! `d(x,z)² + d(antipode(x),z)² = diameter²` for all `z`, which is what
//! makes the no-measurement EMSE exactly `diameter²/2` for any prior that
//! weighs antipodal pairs equally.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use crate::quad;

/// Absolute tolerance for phase comparisons (support matching, duplicate
/// detection). Weight comparisons use [`WEIGHT_TOL`].
pub const PHASE_TOL: f64 = 1e-9;

/// Absolute tolerance for probability-weight comparisons and normalization.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Errors from phase, metric, prior, and EMSE construction or evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("phase value must be finite, got {0}")]
    NonFinitePhase(f64),
    #[error("metric diameter must be a finite positive real, got {0}")]
    InvalidDiameter(f64),
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid estimate law: {0}")]
    InvalidLaw(String),
}

/// A phase in `[0, 2)`, in units of π radians.
///
/// Construction always normalizes mod 2, so the pseudo-metric on all of ℝ
/// collapses to a true metric on the quotient circle at the type boundary.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Phase(f64);

impl Phase {
    /// Phase 0.
    pub const ZERO: Phase = Phase(0.0);
    /// Phase 1, the antipode of 0.
    pub const ONE: Phase = Phase(1.0);

    /// Normalize an arbitrary finite real into `[0, 2)`.
    pub fn wrap(r: f64) -> Result<Phase, MetricError> {
        if !r.is_finite() {
            return Err(MetricError::NonFinitePhase(r));
        }
        let mut v = r.rem_euclid(2.0);
        // rem_euclid can round up to exactly 2.0 for tiny negative inputs.
        if v >= 2.0 {
            v -= 2.0;
        }
        Ok(Phase(v))
    }

    /// The normalized value in `[0, 2)`.
    pub fn value(self) -> f64 {
        self.0
    }

    /// The antipodal phase `(self + 1) mod 2`.
    pub fn antipode(self) -> Phase {
        Phase(if self.0 >= 1.0 { self.0 - 1.0 } else { self.0 + 1.0 })
    }

    /// True when the two phases coincide on the circle within `tol`
    /// (wrap-around aware: 1e-12 and 2 − 1e-12 are close).
    pub fn approx_eq(self, other: Phase, tol: f64) -> bool {
        let d = (self.0 - other.0).abs();
        d <= tol || (2.0 - d) <= tol
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phase({})", self.0)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        Phase::wrap(raw).map_err(serde::de::Error::custom)
    }
}

/// The antipodal metric `d(x, y) = diameter · |sin(π(x − y)/2)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AntipodalMetric {
    diameter: f64,
}

impl AntipodalMetric {
    /// The unit-diameter metric used by the protocol itself.
    pub fn unit() -> AntipodalMetric {
        AntipodalMetric { diameter: 1.0 }
    }

    /// A metric with the given diameter (finite, positive).
    pub fn new(diameter: f64) -> Result<AntipodalMetric, MetricError> {
        if !diameter.is_finite() || diameter <= 0.0 {
            return Err(MetricError::InvalidDiameter(diameter));
        }
        Ok(AntipodalMetric { diameter })
    }

    pub fn diameter(self) -> f64 {
        self.diameter
    }

    /// Distance between two phases; symmetric, zero iff `x = y` on the
    /// circle, maximal (`diameter`) exactly on antipodal pairs.
    pub fn distance(self, x: Phase, y: Phase) -> f64 {
        self.diameter * (0.5 * PI * (x.value() - y.value())).sin().abs()
    }

    /// Squared distance, the per-round error unit of the protocol.
    pub fn sq_distance(self, x: Phase, y: Phase) -> f64 {
        let d = self.distance(x, y);
        d * d
    }
}

impl Default for AntipodalMetric {
    fn default() -> Self {
        AntipodalMetric::unit()
    }
}

/// Declarative prior over phases, as it appears in scenario configuration.
///
/// Validation ([`PriorSpec::validate`]) produces the resolved [`Prior`]
/// and enforces the antipodal invariants: nonnegative weights summing to
/// one, equal mass on both members of every antipodal pair, and — for the
/// grid variant — a vanishing first harmonic `Σ exp(2πiθ_k) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSpec {
    /// The uniform density 1/2 on `[0, 2)`.
    ContinuousUniform,
    /// `n` equally weighted points `ε + 2k/n (mod 2)`; `n` even, `n > 2`.
    Grid {
        n: u32,
        #[serde(default)]
        epsilon: f64,
    },
    /// Explicit weighted support; must still be antipodally symmetric.
    Explicit { points: Vec<(f64, f64)> },
}

/// Uniform grid prior on `{ε + 2k/n mod 2 : k = 0..n−1}` with weight `1/n`
/// each. Requires even `n > 2` so the support is antipodally closed.
pub fn make_grid_prior(n: u32, epsilon: f64) -> Result<PriorSpec, MetricError> {
    if n <= 2 || n % 2 != 0 {
        return Err(MetricError::InvalidPrior(format!(
            "grid prior needs an even point count greater than 2, got {n}"
        )));
    }
    if !epsilon.is_finite() {
        return Err(MetricError::InvalidPrior(format!(
            "grid offset must be finite, got {epsilon}"
        )));
    }
    Ok(PriorSpec::Grid { n, epsilon })
}

impl PriorSpec {
    /// Validate the spec and resolve it to a concrete [`Prior`].
    pub fn validate(&self) -> Result<Prior, MetricError> {
        match self {
            PriorSpec::ContinuousUniform => Ok(Prior::ContinuousUniform),
            PriorSpec::Grid { n, epsilon } => {
                // Re-run the constructor checks: specs can arrive from
                // deserialized config, not only from make_grid_prior.
                make_grid_prior(*n, *epsilon)?;
                let points = grid_points(*n, *epsilon)?;
                let weight = 1.0 / *n as f64;
                let support: Vec<(Phase, f64)> =
                    points.into_iter().map(|p| (p, weight)).collect();
                check_first_harmonic(&support)?;
                let prior = Prior::discrete_checked(support)?;
                Ok(prior)
            }
            PriorSpec::Explicit { points } => {
                let mut support = Vec::with_capacity(points.len());
                for &(value, weight) in points {
                    support.push((Phase::wrap(value)?, weight));
                }
                Prior::discrete_checked(support)
            }
        }
    }
}

fn grid_points(n: u32, epsilon: f64) -> Result<Vec<Phase>, MetricError> {
    (0..n)
        .map(|k| Phase::wrap(epsilon + 2.0 * k as f64 / n as f64))
        .collect()
}

/// `|Σ w_k exp(2πiθ_k)|` must vanish for grid priors.
fn check_first_harmonic(support: &[(Phase, f64)]) -> Result<(), MetricError> {
    let (mut re, mut im) = (0.0, 0.0);
    for &(theta, _) in support {
        let angle = 2.0 * PI * theta.value();
        re += angle.cos();
        im += angle.sin();
    }
    let modulus = (re * re + im * im).sqrt();
    if modulus >= 1e-9 {
        return Err(MetricError::InvalidPrior(format!(
            "grid first harmonic does not vanish: |Σ exp(2πiθ_k)| = {modulus:e}"
        )));
    }
    Ok(())
}

/// A validated, resolved prior over phases.
#[derive(Clone, Debug, PartialEq)]
pub enum Prior {
    /// Uniform density 1/2 on `[0, 2)`.
    ContinuousUniform,
    /// Finite weighted support (weights sum to 1).
    Discrete(Vec<(Phase, f64)>),
}

impl Prior {
    /// Build a discrete prior enforcing every antipodal invariant.
    pub fn discrete_checked(support: Vec<(Phase, f64)>) -> Result<Prior, MetricError> {
        validate_weights(&support).map_err(MetricError::InvalidPrior)?;
        // Every support point must have its antipode in the support with
        // (nearly) identical mass.
        for &(theta, weight) in &support {
            let anti = theta.antipode();
            let partner = support
                .iter()
                .find(|(other, _)| other.approx_eq(anti, PHASE_TOL));
            match partner {
                Some(&(_, w)) if (w - weight).abs() <= WEIGHT_TOL => {}
                Some(&(_, w)) => {
                    return Err(MetricError::InvalidPrior(format!(
                        "antipodal masses differ at θ={}: {weight} vs {w}",
                        theta.value()
                    )))
                }
                None => {
                    return Err(MetricError::InvalidPrior(format!(
                        "support point θ={} has no antipodal partner",
                        theta.value()
                    )))
                }
            }
        }
        Ok(Prior::Discrete(support))
    }

    /// Build a discrete prior checking only that the weights form a
    /// probability vector, deliberately skipping the antipodal-symmetry
    /// requirement.
    ///
    /// This exists for diagnostics on balanced-but-not-antipodal supports
    /// — e.g. an odd uniform grid, whose first harmonic vanishes even
    /// though no point has an antipodal partner. The certification path
    /// never uses it.
    pub fn discrete_unchecked(support: Vec<(Phase, f64)>) -> Result<Prior, MetricError> {
        validate_weights(&support).map_err(MetricError::InvalidPrior)?;
        Ok(Prior::Discrete(support))
    }

    /// Expected value of `f(θ)` under the prior. Discrete supports sum
    /// exactly; the continuous prior integrates adaptively to `quad_tol`.
    pub fn expect<F: Fn(Phase) -> f64>(&self, f: F, quad_tol: f64) -> f64 {
        match self {
            Prior::ContinuousUniform => {
                0.5 * quad::adaptive_simpson(
                    &|t| f(Phase::wrap(t).expect("quadrature node is finite")),
                    0.0,
                    2.0,
                    quad_tol,
                )
            }
            Prior::Discrete(support) => support
                .iter()
                .map(|&(theta, weight)| weight * f(theta))
                .sum(),
        }
    }
}

fn validate_weights(support: &[(Phase, f64)]) -> Result<(), String> {
    if support.is_empty() {
        return Err("support is empty".into());
    }
    let mut total = 0.0;
    for &(theta, weight) in support {
        if !weight.is_finite() || weight < 0.0 {
            return Err(format!(
                "weight at θ={} must be a nonnegative finite real, got {weight}",
                theta.value()
            ));
        }
        total += weight;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(format!("weights sum to {total}, expected 1"));
    }
    for (i, &(a, _)) in support.iter().enumerate() {
        for &(b, _) in &support[i + 1..] {
            if a.approx_eq(b, PHASE_TOL) {
                return Err(format!("duplicate support point θ={}", a.value()));
            }
        }
    }
    Ok(())
}

/// Conditional distribution of the estimate for one value of θ.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimateDist {
    /// Deterministic estimate.
    Point(Phase),
    /// Finite mixture of point estimates (weights must sum to 1).
    Discrete(Vec<(Phase, f64)>),
    /// Uniform density 1/2 over `[0, 2)`.
    ContinuousUniform,
}

impl EstimateDist {
    fn validate(&self) -> Result<(), MetricError> {
        match self {
            EstimateDist::Point(_) | EstimateDist::ContinuousUniform => Ok(()),
            EstimateDist::Discrete(atoms) => {
                validate_weights(atoms).map_err(MetricError::InvalidLaw)
            }
        }
    }

    /// Mean squared distance from `theta` to an estimate drawn from this
    /// distribution.
    fn mean_sq_distance(&self, theta: Phase, m: AntipodalMetric, quad_tol: f64) -> f64 {
        match self {
            EstimateDist::Point(est) => m.sq_distance(theta, *est),
            EstimateDist::Discrete(atoms) => atoms
                .iter()
                .map(|&(est, w)| w * m.sq_distance(theta, est))
                .sum(),
            EstimateDist::ContinuousUniform => {
                0.5 * quad::adaptive_simpson(
                    &|t| m.sq_distance(theta, Phase::wrap(t).expect("finite node")),
                    0.0,
                    2.0,
                    quad_tol,
                )
            }
        }
    }
}

/// Expected mean squared error of an estimate law under a prior:
/// `E_θ~prior [ E_θ̂~law(θ) [ d(θ, θ̂)² ] ]`.
///
/// Discrete supports are summed exactly; continuous directions use
/// adaptive quadrature with absolute tolerance 1e-10 (inner estimate
/// integrals run at 1e-12 so the outer tolerance dominates). The law is
/// re-validated at every θ it is queried at; a non-normalized law is
/// rejected.
pub fn emse<F>(prior: &Prior, law: F, m: AntipodalMetric) -> Result<f64, MetricError>
where
    F: Fn(Phase) -> EstimateDist,
{
    const OUTER_TOL: f64 = 1e-10;
    const INNER_TOL: f64 = 1e-12;
    match prior {
        Prior::Discrete(support) => {
            let mut acc = 0.0;
            for &(theta, weight) in support {
                let dist = law(theta);
                dist.validate()?;
                acc += weight * dist.mean_sq_distance(theta, m, INNER_TOL);
            }
            Ok(acc)
        }
        Prior::ContinuousUniform => {
            // Validate at a probe set first so a malformed law surfaces as
            // an error rather than garbage quadrature.
            for k in 0..8 {
                law(Phase::wrap(0.25 * k as f64)?).validate()?;
            }
            Ok(0.5 * quad::adaptive_simpson(
                &|t| {
                    let theta = Phase::wrap(t).expect("finite node");
                    law(theta).mean_sq_distance(theta, m, INNER_TOL)
                },
                0.0,
                2.0,
                OUTER_TOL,
            ))
        }
    }
}
