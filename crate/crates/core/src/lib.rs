//! Practical quantum coin flipping with attenuated laser pulses.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: the real-amplitude protocol qubits, their mixtures and the
//!   Helstrom (minimum-error) discrimination probability.
//! - [`channel`]: Poisson source statistics, fiber transmission and the
//!   pulse-level detection model.
//! - [`analytics`]: closed forms for the honest abort probability, both
//!   players' cheating probabilities and the classical bound.
//! - [`oracle`]: numerical checks of the discrimination claims the
//!   cheating bounds rest on.
//! - [`simulator`]: seeded Monte Carlo runs of the honest protocol.
//! - [`optimizer`]: fairness solving and the (K, mu) search at a target
//!   honest abort level, plus the figure datasets.
//! - [`cli`]: the `qcoinflip` command line front end.

pub mod acceptance;
pub mod analytics;
pub mod channel;
pub mod cli;
mod error;
pub mod linalg;
pub mod oracle;
pub mod optimizer;
pub mod qstate;
pub mod simulator;

pub use error::{Error, Result};
