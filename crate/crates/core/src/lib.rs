//! Saturation-throughput analysis of a full-duplex CSMA/CA wireless LAN.
//!
//! A single access point serves `n` saturated clients. Every node carries a
//! full-duplex radio: when a client transmits to the AP and the AP's
//! head-of-line packet happens to be addressed to that client, the AP answers
//! in-band and both packets complete in one exchange. A busy tone from the AP
//! silences terminals hidden from the current transmitter, and an in-band
//! collision notification aborts hidden-terminal collisions.
//!
//! Two independent engines cover the same protocol:
//!
//! * an analytical engine ([`chain`], [`fd_model`], [`hd_model`]) that solves
//!   the embedded Markov chain of the head-of-line packet together with a
//!   fixed point over the attempt probabilities, and
//! * a slot-accurate discrete simulator ([`sim`]) of the full protocol over
//!   an arbitrary [`topology::Topology`], including a half-duplex RTS/CTS
//!   baseline.
//!
//! The two are cross-validated against each other; see the `acceptance`
//! integration test for the full battery.

pub mod chain;
pub mod error;
pub mod fd_model;
pub mod hd_model;
pub mod sim;
pub mod timing;
pub mod topology;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
