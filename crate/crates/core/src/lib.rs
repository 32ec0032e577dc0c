//! Teleportation fidelity through three-mode Gaussian channels.
//!
//! Two parties share a two-mode Gaussian state that is itself the marginal of
//! a three-mode one; a third party can measure the leftover mode with any
//! local Gaussian detection and broadcast the outcome. This crate computes
//! the teleportation fidelity of the bare pair, the fidelity conditioned on
//! such a measurement, and the measurement (squeezing and orientation) that
//! maximizes it, together with brute-force oracles that double-check every
//! closed form.

pub mod error;
pub mod fidelity;
pub mod gaussian;
pub mod optimizer;
pub mod oracle;

pub use error::{Error, Result};

// Downstream crates build inputs out of nalgebra types; re-export the exact
// version this crate was compiled against so the two can never drift apart.
pub use nalgebra;
