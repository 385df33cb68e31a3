//! Error type shared by the analytical and simulation engines.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter failed validation before any computation started.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// alpha + beta = 0: the backoff states have no exit and the chain has
    /// no stationary distribution.
    #[error("chain has no exit from backoff (alpha + beta = 0)")]
    DegenerateChain,

    /// An intermediate quantity of the fixed-point map left its feasible
    /// range, e.g. a non-positive channel-state denominator.
    #[error("model infeasible: {0}")]
    Infeasible(String),

    /// The fixed-point iteration ran out of its iteration budget. Carries
    /// the last iterate so callers can inspect how close it got.
    #[error("fixed point did not converge after {iters} iterations (residual {residual:.3e}, last iterate omega={omega:.6}, omega_ap={omega_ap:.6}, nu={nu:.6})")]
    NoConvergence {
        iters: usize,
        residual: f64,
        omega: f64,
        omega_ap: f64,
        nu: f64,
    },

    /// The requested per-client hidden count cannot be produced by any ring
    /// radius. Reports the nearest counts that can.
    #[error("no ring radius yields n_h = {target} for n = {n}; nearest achievable: {nearest_below:?} below, {nearest_above:?} above")]
    InfeasibleRingTarget {
        n: usize,
        target: usize,
        nearest_below: Option<usize>,
        nearest_above: Option<usize>,
    },

    /// A topology violated a structural requirement of the simulator.
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    /// A topology dump could not be parsed.
    #[error("malformed topology file: {0}")]
    TopologyParse(String),
}
