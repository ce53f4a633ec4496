//! Core engine for estimation-certified randomness (ECR).
//!
//! ECR is an interactive protocol in which a verifier encodes a phase
//! `θ ∈ [0, 2)` (in units of π radians) into a single-use qubit state, a
//! prover returns an estimate `θ̂`, and the verifier certifies randomness
//! when the accumulated squared estimation error differs significantly
//! from the no-measurement value of 1/2. This crate provides:
//!
//! - [`metric`]: the antipodal phase metric, antipodal priors, and exact
//!   expected-mean-squared-error (EMSE) computation;
//! - [`channel`]: a Born-rule simulation of the quantum layer with
//!   single-use state handles that structurally hide θ from the prover;
//! - [`prover`]: pluggable θ-blind estimation strategies;
//! - [`verifier`]: round orchestration, z-score certification, and
//!   entropy accounting;
//! - [`oracles`]: independent numerical checks (brute-force minimization,
//!   closed forms, quadrature, Fisher information) used to validate the
//!   protocol bounds.
//!
//! Everything here is a *simulation*: measurement outcomes are drawn from
//! a seeded deterministic pseudo-random stream, so the output is
//! reproducible and is not itself a source of randomness.

pub mod channel;
pub mod metric;
pub mod oracles;
pub mod prover;
pub mod verifier;

mod quad;
