//! Simulation of a quantum bit commitment protocol built on EPR pairs.
//!
//! Alice commits to a bit by sending pairs in one of four maximally
//! entangled states; Bob measures them along secret axes and, once Alice
//! opens, checks the spin products her claimed states predict. The crate
//! provides:
//!
//! * [`quantum`]: a small dense state-vector engine with Born-rule sampling
//!   and density matrices.
//! * [`epr`]: the commitment states, the three-particle attack state, and
//!   closed-form correlations.
//! * [`protocol`]: the honest parties as explicit steps, and [`transcript`]
//!   for serialized sessions.
//! * [`attacks`]: naive substitution and the delayed-choice EPR attack.
//! * [`harness`]: Monte Carlo experiments and JSON/CSV reports.

pub mod attacks;
pub mod epr;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod quantum;
pub mod rng;
pub mod stats;
pub mod transcript;

pub use error::{Error, Result};
