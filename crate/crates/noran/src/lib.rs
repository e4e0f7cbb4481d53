//! Physical-layer security with non-orthogonal artificial noise (NORAN).
//!
//! The toolkit models a wiretap channel (transmitter, legitimate receiver,
//! eavesdropper) in which the transmitter injects artificial noise along the
//! signal direction. Unlike classical null-space artificial noise, the
//! injected noise also lands on the legitimate receiver, so a shared,
//! CSI-keyed codebook lets that receiver regenerate and subtract it while the
//! eavesdropper cannot.
//!
//! Modules:
//! - [`channel`]: Rayleigh fading draws, precoder selection, received-signal
//!   equations.
//! - [`secrecy`]: closed-form capacities, secrecy reports, and the null-space
//!   artificial-noise baseline.
//! - [`optimizer`]: the concave-convex power-split solver and its brute-force
//!   oracle.
//! - [`codebook`]: CSI-keyed codebook construction, lookup, persistence, and
//!   receiver-side noise cancellation.
//! - [`experiments`]: Monte Carlo sweeps of secrecy capacity and eavesdropper
//!   bit error rate with CSV output.
//!
//! Everything stochastic flows through [`rng::RngStream`], a pinned
//! deterministic generator; a master seed fully determines every result.

pub mod channel;
pub mod codebook;
pub mod error;
pub mod experiments;
mod linalg;
pub mod optimizer;
pub mod rng;
pub mod secrecy;

pub use error::{Error, Result};
