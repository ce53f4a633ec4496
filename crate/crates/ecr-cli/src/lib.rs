//! Command-line front end for the phase-estimation certification
//! simulator: scenario configuration, the two-process wire protocol, and
//! the on-disk artifact formats.
//!
//! The `ecr` binary is a thin shell over these modules; they are exposed
//! as a library so the protocol and artifact contracts can be exercised
//! directly by integration tests.

pub mod artifacts;
pub mod checks;
pub mod client;
pub mod config;
pub mod scenario;
pub mod server;
pub mod wire;
