//! Steady-state full-duplex system model.
//!
//! For a symmetric scenario (every client sees the same covered/hidden
//! split) the per-slot attempt probabilities of clients and AP close a loop:
//! the chain parameters (alpha, beta, p) of each node depend on everyone's
//! attempt probabilities, and the attempt probabilities are stationary
//! probabilities of the resulting chains. [`solve_fixed_point`] finds the
//! triple (omega, omega_ap, nu) at which that loop is self-consistent, where
//! `omega` is a client's per-slot attempt probability, `omega_ap` the AP's,
//! and `nu` the probability that a client's backoff counter is too large to
//! fire within one vulnerable period.
//!
//! From a client's point of view a non-idle slot belongs to one of four
//! episode families: a full-duplex exchange (duration `tau_F`), a one-way
//! exchange under a busy tone (`tau_H`), the busy-tone-plus-ACK tail of an
//! exchange whose initiator it cannot hear (`tau_A`), or a collision
//! (`tau_C`). The weights Y1..Y4 below are the per-slot probabilities of
//! each family starting, and `alpha` follows from the renewal balance of
//! those episode lengths. The AP only ever sees one-way exchanges,
//! collisions, or idle while contending (weight Z1).

use crate::chain::{self, ChainParams, HoldingTimes};
use crate::timing::MacTiming;
use crate::topology::Topology;
use crate::{Error, Result};

/// Symmetric scenario: `n` clients, each covering `n_c` and hidden from
/// `n_h` of its peers, all contending with window `cw`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdScenario {
    pub n: usize,
    pub n_c: usize,
    pub n_h: usize,
    pub cw: usize,
    pub timing: MacTiming,
}

impl FdScenario {
    pub fn new(n: usize, n_c: usize, n_h: usize, cw: usize, timing: MacTiming) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        if n_c + n_h != n - 1 {
            return Err(Error::InvalidParameter(format!(
                "n_c + n_h must equal n - 1 (got {n_c} + {n_h} != {})",
                n - 1
            )));
        }
        if cw < timing.vulnerable as usize {
            return Err(Error::InvalidParameter(format!(
                "contention window {cw} is below the vulnerable period {}; \
                 the no-attempt probability nu would be an empty sum",
                timing.vulnerable
            )));
        }
        Ok(FdScenario {
            n,
            n_c,
            n_h,
            cw,
            timing,
        })
    }

    /// Scenario with the hidden count taken directly; n_c = n - 1 - n_h.
    pub fn symmetric(n: usize, n_h: usize, cw: usize, timing: MacTiming) -> Result<Self> {
        if n_h > n.saturating_sub(1) {
            return Err(Error::InvalidParameter(format!(
                "n_h = {n_h} exceeds the peer count {}",
                n.saturating_sub(1)
            )));
        }
        Self::new(n, n - 1 - n_h, n_h, cw, timing)
    }
}

/// Which expression to use for the collision durations perceived by a
/// client while sensing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauCVariant {
    /// Quadratic mixing coefficients over covered/hidden pair counts, kept
    /// exactly as published. The second coefficient does not vanish with
    /// the hidden count and the mix can exceed the longest possible pair
    /// collision, which overstates the collision time and costs several
    /// percent of accuracy against the simulator at small windows.
    Standard,
    /// Per-pair class weighting: a colliding pair is mutually covered (one
    /// header) or mutually hidden (1.5 headers on average), and an observer
    /// senses the collision only when at least one collider is within its
    /// range. Bounded by the physical pair maximum; the default.
    #[default]
    PairwiseVisibility,
}

impl TauCVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            TauCVariant::Standard => "standard",
            TauCVariant::PairwiseVisibility => "pairwise_visibility",
        }
    }
}

/// Collision durations and mean holding times for the scenario, in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionTimes {
    /// Mean collision length sensed by a client.
    pub tau_c: f64,
    /// Mean collision length sensed by the AP.
    pub tau_c_ap: f64,
    /// Client dwell in the collision state.
    pub delta_c: f64,
    /// AP dwell in the collision state: one slot, it learns immediately.
    pub delta_c_ap: f64,
    /// Client dwell in the success state (exchange minus the header already
    /// spent in T), averaged over full-duplex and one-way outcomes.
    pub delta_s: f64,
    /// AP dwell in the success state: always the full-duplex remainder.
    pub delta_s_ap: f64,
    /// Header time, the dwell in T.
    pub delta_t: f64,
}

/// Collision durations and holding times. For n = 1 there are no peers to
/// collide with and the covered-only values apply.
pub fn collision_times(sc: &FdScenario, variant: TauCVariant) -> CollisionTimes {
    let h = sc.timing.header as f64;
    let sigma = sc.timing.sigma as f64;
    let tau_f = sc.timing.fd_exchange as f64;
    let tau_h = sc.timing.hd_exchange as f64;
    let tau_v = sc.timing.vulnerable as f64;
    let n = sc.n as f64;
    let n_c = sc.n_c as f64;
    let n_h = sc.n_h as f64;

    let (tau_c, tau_c_ap) = if sc.n < 2 {
        (h, h)
    } else {
        let tau_c_ap = (n_c * h + n_h * 1.5 * h) / (n - 1.0);
        let tau_c = match variant {
            TauCVariant::Standard => {
                ((n_c * n_c + 2.0 * n_c * n_h + 2.0 * n_h) * h
                    + (n_c * n_c - 2.0 * n_c) * 1.5 * h)
                    / (n * (n - 1.0))
            }
            TauCVariant::PairwiseVisibility => {
                let visible = 1.0 - (n_h / (n - 1.0)).powi(2);
                visible * (n_c / (n - 1.0) * h + n_h / (n - 1.0) * 1.5 * h)
            }
        };
        (tau_c, tau_c_ap)
    };

    CollisionTimes {
        tau_c,
        tau_c_ap,
        delta_c: n_h / (n + 1.0) * tau_v / 2.0 + (n_c + 1.0) / (n + 1.0) * sigma,
        delta_c_ap: sigma,
        delta_s: (tau_f - h) / n + (1.0 - 1.0 / n) * (tau_h - h),
        delta_s_ap: tau_f - h,
        delta_t: h,
    }
}

fn check_unit(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&v) {
        return Err(Error::Infeasible(format!("{name} = {v} out of [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Per-slot probability that a client senses the channel idle, together
/// with the episode-start weights Y1 (full-duplex exchange), Y2 (one-way
/// exchange), Y3 (busy-tone tail) and Y4 (channel stays idle).
pub fn client_alpha(
    omega: f64,
    omega_ap: f64,
    nu: f64,
    sc: &FdScenario,
    tau_c: f64,
) -> Result<(f64, [f64; 4])> {
    let n = sc.n as f64;
    let n_c = sc.n_c as f64;
    let n_h = sc.n_h as f64;
    let qc = 1.0 - omega;
    let qa = 1.0 - omega_ap;

    // Terms weighted by n_c carry the exponent n_c - 1 (the initiator's
    // covered set contains the observer); they vanish with n_c. Terms
    // weighted by n_h carry the exponent n_h - 1 for the same reason. The
    // quiet probability enters squared: an attempt survives its hidden
    // peers only if none fires in the header-long window after it starts
    // and none was already mid-header when it started.
    let quiet = nu * nu;
    let covered_start = if sc.n_c == 0 {
        0.0
    } else {
        omega * qa * qc.powi(sc.n_c as i32 - 1) * quiet.powi(sc.n_h as i32)
    };
    let hidden_start = if sc.n_h == 0 {
        0.0
    } else {
        omega * qa * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32 - 1)
    };

    let y1 = n_c / n * covered_start + omega_ap * qc.powi(sc.n as i32 - 1);
    let y2 = n_c * (n - 1.0) / n * covered_start + n_h / n * hidden_start;
    let y3 = n_h * (n - 1.0) / n * hidden_start;
    let y4 = qc.powi(sc.n_c as i32) * qa * (1.0 - n_h * hidden_start);

    let tau_f = sc.timing.fd_exchange as f64;
    let tau_h = sc.timing.hd_exchange as f64;
    let tau_a = sc.timing.bt_ack as f64;
    let denom =
        1.0 + (tau_f - tau_c) * y1 + (tau_h - tau_c) * y2 + (tau_a - tau_c) * y3
            + tau_c * (1.0 - y4);
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "client idle-probability denominator {denom} <= 0"
        )));
    }
    let alpha = check_unit("alpha", 1.0 / denom)?;
    Ok((alpha, [y1, y2, y3, y4]))
}

/// The AP's idle probability, the weight Z1 of a one-way exchange starting,
/// and its success probability p_ap = (1 - omega)^n.
pub fn ap_alpha(omega: f64, nu: f64, sc: &FdScenario, tau_c_ap: f64) -> Result<(f64, f64, f64)> {
    let n = sc.n as f64;
    let qc = 1.0 - omega;
    let quiet = nu * nu;
    let z1 = (n - 1.0) * omega * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32);
    let p_ap = check_unit("p_ap", qc.powi(sc.n as i32))?;
    let tau_h = sc.timing.hd_exchange as f64;
    let denom = 1.0 + (tau_h - tau_c_ap) * z1 + tau_c_ap * (1.0 - p_ap);
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "AP idle-probability denominator {denom} <= 0"
        )));
    }
    let alpha_ap = check_unit("alpha_ap", 1.0 / denom)?;
    Ok((alpha_ap, z1, p_ap))
}

/// A client's full-duplex entry probability during backoff and its
/// header-success probability.
pub fn client_beta_p(omega: f64, omega_ap: f64, nu: f64, sc: &FdScenario) -> Result<(f64, f64)> {
    let n = sc.n as f64;
    let qc = 1.0 - omega;
    let beta = check_unit("beta", omega_ap / n * qc.powi(sc.n as i32 - 1))?;
    let quiet = nu * nu;
    let p = check_unit(
        "p",
        (1.0 - omega_ap) * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32),
    )?;
    Ok((beta, p))
}

/// The AP's full-duplex reply probability during backoff: some client must
/// transmit cleanly and the AP's head-of-line packet must be for that exact
/// client, which happens for any of the n clients with probability 1/n each.
pub fn ap_beta(omega: f64, nu: f64, sc: &FdScenario) -> Result<f64> {
    let qc = 1.0 - omega;
    let quiet = nu * nu;
    check_unit(
        "beta_ap",
        omega * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32),
    )
}

/// Probability that a client hears only the AP half of an exchange whose
/// initiator is hidden from it.
pub fn nu_ap(omega: f64, omega_ap: f64, nu: f64, sc: &FdScenario) -> f64 {
    if sc.n_h == 0 {
        0.0
    } else {
        let quiet = nu * nu;
        sc.n_h as f64
            * omega
            * (1.0 - omega_ap)
            * (1.0 - omega).powi(sc.n_c as i32)
            * quiet.powi(sc.n_h as i32)
    }
}

/// Options for the damped fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOpts {
    /// Max-norm residual below which the iterate is accepted.
    pub tol: f64,
    pub max_iters: usize,
    /// Picard damping factor: x <- (1 - damping) x + damping F(x).
    pub damping: f64,
    /// Damping used after the residual has risen for 10 straight steps.
    pub fallback_damping: f64,
    pub tau_c_variant: TauCVariant,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            tol: 1e-10,
            max_iters: 10_000,
            damping: 0.5,
            fallback_damping: 0.1,
            tau_c_variant: TauCVariant::Standard,
        }
    }
}

/// Converged fixed point with all derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub omega: f64,
    pub omega_ap: f64,
    pub nu: f64,
    pub nu_ap: f64,
    pub alpha: f64,
    /// Full-duplex entry probability per idle-sensed slot; the chain's
    /// per-slot transition rate is alpha times this.
    pub beta: f64,
    pub p: f64,
    pub alpha_ap: f64,
    /// As `beta`, for the AP.
    pub beta_ap: f64,
    pub p_ap: f64,
    pub y: [f64; 4],
    pub z1: f64,
    pub tau_c: f64,
    pub tau_c_ap: f64,
    /// Normalized per-client throughput: payload airtime delivered per slot.
    pub throughput_client: f64,
    pub throughput_ap: f64,
    /// n * client + AP.
    pub throughput_system: f64,
    /// Max-norm change of (omega, omega_ap, nu) under one more iteration.
    pub residual: f64,
    pub iterations: usize,
    pub n: usize,
}

impl FixedPointSolution {
    /// Closed-form gain estimate: the share of exchanges that complete two
    /// packets instead of one, 1 + (wp + wa pa) / (n wp + wa pa). Lies in
    /// (1, 2] whenever some successful traffic flows.
    pub fn gain_estimate(&self) -> Result<f64> {
        let num = self.omega * self.p + self.omega_ap * self.p_ap;
        let den = self.n as f64 * self.omega * self.p + self.omega_ap * self.p_ap;
        if den <= 0.0 {
            return Err(Error::Infeasible(
                "gain estimate undefined: no successful traffic".into(),
            ));
        }
        Ok(1.0 + num / den)
    }
}

struct MapEval {
    omega: f64,
    omega_ap: f64,
    nu: f64,
    alpha: f64,
    beta: f64,
    beta_idle: f64,
    p: f64,
    y: [f64; 4],
    alpha_ap: f64,
    beta_ap: f64,
    beta_ap_idle: f64,
    p_ap: f64,
    z1: f64,
    client: chain::ChainSolution,
    ap: chain::ChainSolution,
}

/// One application of the fixed-point map at (omega, omega_ap, nu).
///
/// omega, omega_ap and nu are probabilities conditioned on the previous
/// slot being idle (that is how the channel-state weights use them), so the
/// chain feeds back its attempt probability among backoff states rather
/// than the raw stationary mass of T. The full-duplex entry rates beta are
/// idle-conditioned events as well; the chain consumes per-slot transition
/// probabilities, which puts one factor of the idle probability in front.
fn eval_map(x: [f64; 3], sc: &FdScenario, ct: &CollisionTimes) -> Result<MapEval> {
    let [omega, omega_ap, nu] = x;
    let (alpha, y) = client_alpha(omega, omega_ap, nu, sc, ct.tau_c)?;
    let (beta_idle, p) = client_beta_p(omega, omega_ap, nu, sc)?;
    let beta = alpha * beta_idle;
    let client = chain::steady_state(&ChainParams::new(alpha, beta, p, sc.cw)?)?;

    let (alpha_ap, z1, p_ap) = ap_alpha(omega, nu, sc, ct.tau_c_ap)?;
    let beta_ap_idle = ap_beta(omega, nu, sc)?;
    let beta_ap = alpha_ap * beta_ap_idle;
    let ap = chain::steady_state(&ChainParams::new(alpha_ap, beta_ap, p_ap, sc.cw)?)?;

    Ok(MapEval {
        omega: client.attempt_given_idle(),
        omega_ap: ap.attempt_given_idle(),
        nu: client.quiet_given_backoff(sc.timing.vulnerable as usize),
        alpha,
        beta,
        beta_idle,
        p,
        y,
        alpha_ap,
        beta_ap,
        beta_ap_idle,
        p_ap,
        z1,
        client,
        ap,
    })
}

/// Standard initial guess: the classic saturation heuristic 2 / (W + 1) for
/// both attempt probabilities, and the idle-chain estimate for nu.
fn initial_guess(sc: &FdScenario) -> [f64; 3] {
    let omega = 2.0 / (sc.cw as f64 + 1.0);
    [omega, omega, (1.0 - omega).powi(sc.timing.vulnerable as i32)]
}

/// Solves the (omega, omega_ap, nu) fixed point by damped Picard iteration.
pub fn solve_fixed_point(sc: &FdScenario, opts: &SolverOpts) -> Result<FixedPointSolution> {
    solve_fixed_point_from(sc, opts, initial_guess(sc))
}

/// As [`solve_fixed_point`] but from an explicit starting triple; used by
/// the multi-start diagnostic.
pub fn solve_fixed_point_from(
    sc: &FdScenario,
    opts: &SolverOpts,
    start: [f64; 3],
) -> Result<FixedPointSolution> {
    let ct = collision_times(sc, opts.tau_c_variant);
    let mut x = start;
    let mut gamma = opts.damping;
    let mut prev_residual = f64::INFINITY;
    let mut rising = 0u32;

    for iter in 0..opts.max_iters {
        let eval = eval_map(x, sc, &ct)?;
        let fx = [eval.omega, eval.omega_ap, eval.nu];
        let residual = x
            .iter()
            .zip(&fx)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);

        if residual <= opts.tol {
            return finalize(sc, &ct, x, eval, residual, iter);
        }

        if residual > prev_residual {
            rising += 1;
            if rising >= 10 {
                gamma = opts.fallback_damping;
                rising = 0;
            }
        } else {
            rising = 0;
        }
        prev_residual = residual;

        for (xi, fi) in x.iter_mut().zip(&fx) {
            *xi = (1.0 - gamma) * *xi + gamma * fi;
        }
    }

    Err(Error::NoConvergence {
        iters: opts.max_iters,
        residual: prev_residual,
        omega: x[0],
        omega_ap: x[1],
        nu: x[2],
    })
}

fn finalize(
    sc: &FdScenario,
    ct: &CollisionTimes,
    x: [f64; 3],
    eval: MapEval,
    residual: f64,
    iterations: usize,
) -> Result<FixedPointSolution> {
    let [omega, omega_ap, nu] = x;
    let client_params = ChainParams::new(eval.alpha, eval.beta, eval.p, sc.cw)?;
    let client_delta = HoldingTimes::new(&client_params, ct.delta_t, ct.delta_s, ct.delta_c)?;
    let client_visits = chain::visit_probabilities(&eval.client, &client_params);
    let client_lim = chain::limiting_probs(&client_visits, &client_delta)?;

    let ap_params = ChainParams::new(eval.alpha_ap, eval.beta_ap, eval.p_ap, sc.cw)?;
    let ap_delta = HoldingTimes::new(&ap_params, ct.delta_t, ct.delta_s_ap, ct.delta_c_ap)?;
    let ap_visits = chain::visit_probabilities(&eval.ap, &ap_params);
    let ap_lim = chain::limiting_probs(&ap_visits, &ap_delta)?;

    // A visit to S delivers exactly one payload over delta_s slots; the
    // normalized rate is the exact payload airtime per slot of real time.
    let lp = sc.timing.payload_slots_exact;
    let throughput_client = client_lim.throughput * lp / ct.delta_s;
    let throughput_ap = ap_lim.throughput * lp / ct.delta_s_ap;

    Ok(FixedPointSolution {
        omega,
        omega_ap,
        nu,
        nu_ap: nu_ap(omega, omega_ap, nu, sc),
        alpha: eval.alpha,
        beta: eval.beta_idle,
        p: eval.p,
        alpha_ap: eval.alpha_ap,
        beta_ap: eval.beta_ap_idle,
        p_ap: eval.p_ap,
        y: eval.y,
        z1: eval.z1,
        tau_c: ct.tau_c,
        tau_c_ap: ct.tau_c_ap,
        throughput_client,
        throughput_ap,
        throughput_system: sc.n as f64 * throughput_client + throughput_ap,
        residual,
        iterations,
        n: sc.n,
    })
}

/// Multi-start diagnostic: solves from `starts` random points and reports
/// the largest component-wise spread among the converged triples.
#[derive(Debug, Clone)]
pub struct MultiStartReport {
    pub solutions: Vec<FixedPointSolution>,
    pub max_spread: f64,
    /// True when the spread exceeds 1e-6, i.e. the map has (numerically)
    /// distinct attractors.
    pub disagreement: bool,
}

pub fn multi_start_check(
    sc: &FdScenario,
    opts: &SolverOpts,
    starts: usize,
    seed: u64,
) -> Result<MultiStartReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut solutions = Vec::with_capacity(starts);
    for _ in 0..starts {
        let start = [
            rng.gen_range(1e-6..0.5),
            rng.gen_range(1e-6..0.5),
            rng.gen_range(0.1..1.0),
        ];
        solutions.push(solve_fixed_point_from(sc, opts, start)?);
    }
    let mut max_spread = 0.0f64;
    for a in &solutions {
        for b in &solutions {
            max_spread = max_spread
                .max((a.omega - b.omega).abs())
                .max((a.omega_ap - b.omega_ap).abs())
                .max((a.nu - b.nu).abs());
        }
    }
    Ok(MultiStartReport {
        solutions,
        max_spread,
        disagreement: max_spread > 1e-6,
    })
}

/// Per-node averaging over an asymmetric topology: each client's
/// (n_c, n_h) pair is solved as if the whole network were symmetric with
/// those counts, and the system throughputs are averaged. Failed nodes are
/// reported alongside the mean, never dropped silently.
#[derive(Debug, Clone)]
pub struct RandomTopologyEstimate {
    /// Mean system throughput over the nodes that solved.
    pub system_throughput: f64,
    /// One entry per client: that node's symmetric-equivalent system
    /// throughput, or the reason it failed.
    pub per_node: Vec<std::result::Result<f64, Error>>,
    pub failures: usize,
}

pub fn random_topology_estimate(
    topology: &Topology,
    cw: usize,
    timing: &MacTiming,
    opts: &SolverOpts,
) -> Result<RandomTopologyEstimate> {
    let n = topology.n();
    let mut per_node = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut ok = 0usize;
    for i in 0..n {
        let result = FdScenario::new(n, topology.n_c(i), topology.n_h(i), cw, timing.clone())
            .and_then(|sc| solve_fixed_point(&sc, opts))
            .map(|sol| sol.throughput_system);
        match &result {
            Ok(v) => {
                sum += v;
                ok += 1;
            }
            Err(_) => {}
        }
        per_node.push(result);
    }
    if ok == 0 {
        return Err(Error::Infeasible(
            "every per-node solve failed in the topology average".into(),
        ));
    }
    Ok(RandomTopologyEstimate {
        system_throughput: sum / ok as f64,
        failures: n - ok,
        per_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::{derive_timing, PhyParams};
    use approx::assert_abs_diff_eq;

    fn timing() -> MacTiming {
        derive_timing(&PhyParams::default()).unwrap()
    }

    fn scenario(n: usize, n_h: usize, cw: usize) -> FdScenario {
        FdScenario::symmetric(n, n_h, cw, timing()).unwrap()
    }

    #[test]
    fn silent_channel_is_always_idle() {
        let sc = scenario(20, 4, 512);
        let ct = collision_times(&sc, TauCVariant::Standard);
        let (alpha, y) = client_alpha(0.0, 0.0, 0.7, &sc, ct.tau_c).unwrap();
        assert_abs_diff_eq!(alpha, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y[0], 0.0);
        assert_abs_diff_eq!(y[1], 0.0);
        assert_abs_diff_eq!(y[2], 0.0);
        assert_abs_diff_eq!(y[3], 1.0);

        let (alpha_ap, z1, p_ap) = ap_alpha(0.0, 0.7, &sc, ct.tau_c_ap).unwrap();
        assert_abs_diff_eq!(alpha_ap, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z1, 0.0);
        assert_abs_diff_eq!(p_ap, 1.0);
    }

    #[test]
    fn no_hidden_peers_makes_nu_irrelevant() {
        let sc = scenario(20, 0, 512);
        let ct = collision_times(&sc, TauCVariant::Standard);
        let (a1, _) = client_alpha(0.02, 0.01, 0.3, &sc, ct.tau_c).unwrap();
        let (a2, _) = client_alpha(0.02, 0.01, 0.9, &sc, ct.tau_c).unwrap();
        assert_abs_diff_eq!(a1, a2, epsilon = 1e-15);
    }

    #[test]
    fn single_client_identities() {
        let sc = scenario(1, 0, 64);
        let ct = collision_times(&sc, TauCVariant::Standard);
        let omega = 0.05;
        let (_, _, p_ap) = ap_alpha(omega, 0.5, &sc, ct.tau_c_ap).unwrap();
        assert_abs_diff_eq!(p_ap, 1.0 - omega, epsilon = 1e-15);
        assert_abs_diff_eq!(ap_beta(omega, 0.5, &sc).unwrap(), omega, epsilon = 1e-15);
    }

    #[test]
    fn beta_and_p_collapse_cases() {
        let sc = scenario(20, 8, 512);
        let (beta, _) = client_beta_p(0.05, 0.0, 0.8, &sc).unwrap();
        assert_abs_diff_eq!(beta, 0.0);
        let (_, p) = client_beta_p(0.0, 0.3, 1.0, &sc).unwrap();
        assert_abs_diff_eq!(p, 0.7, epsilon = 1e-15);
    }

    #[test]
    fn ap_beta_ignores_nu_without_hidden_peers() {
        let sc = scenario(20, 0, 512);
        let b1 = ap_beta(0.04, 0.2, &sc).unwrap();
        let b2 = ap_beta(0.04, 0.9, &sc).unwrap();
        assert_abs_diff_eq!(b1, b2, epsilon = 1e-15);
        assert_abs_diff_eq!(ap_beta(0.0, 0.5, &sc).unwrap(), 0.0);
    }

    #[test]
    fn collision_times_direct_arithmetic() {
        // n = 20, n_c = 15, n_h = 4, H = 11.
        let sc = scenario(20, 4, 512);
        let ct = collision_times(&sc, TauCVariant::Standard);
        let h = 11.0;
        let tau_c_ap = (15.0 * h + 4.0 * 1.5 * h) / 19.0;
        let tau_c = ((15.0f64.powi(2) + 2.0 * 15.0 * 4.0 + 2.0 * 4.0) * h
            + (15.0f64.powi(2) - 2.0 * 15.0) * 1.5 * h)
            / (20.0 * 19.0);
        assert_abs_diff_eq!(ct.tau_c_ap, tau_c_ap, epsilon = 1e-12);
        assert_abs_diff_eq!(ct.tau_c, tau_c, epsilon = 1e-12);
        assert_abs_diff_eq!(ct.delta_t, h, epsilon = 1e-12);
        // delta_S = (tau_F - H)/n + (1 - 1/n)(tau_H - H)
        assert_abs_diff_eq!(
            ct.delta_s,
            63.0 / 20.0 + 0.95 * 52.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(ct.delta_c, 4.0 / 21.0 * 5.5 + 16.0 / 21.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ct.delta_c_ap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ap_collision_time_without_hidden_is_one_header() {
        let sc = scenario(20, 0, 512);
        let ct = collision_times(&sc, TauCVariant::Standard);
        assert_abs_diff_eq!(ct.tau_c_ap, 11.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_t_is_header_for_any_scenario() {
        for (n, n_h) in [(1, 0), (2, 0), (5, 2), (20, 12), (30, 18)] {
            let sc = scenario(n, n_h, 512);
            for v in [TauCVariant::Standard, TauCVariant::PairwiseVisibility] {
                assert_abs_diff_eq!(collision_times(&sc, v).delta_t, 11.0);
            }
        }
    }

    #[test]
    fn single_client_fixed_point_collapses() {
        let sc = scenario(1, 0, 64);
        let sol = solve_fixed_point(&sc, &SolverOpts::default()).unwrap();
        assert_abs_diff_eq!(sol.p, 1.0 - sol.omega_ap, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.beta_ap, sol.omega, epsilon = 1e-9);
        assert!(sol.residual <= 1e-10);
    }

    #[test]
    fn fixed_point_replug_residual() {
        let sc = scenario(20, 8, 512);
        let opts = SolverOpts::default();
        let sol = solve_fixed_point(&sc, &opts).unwrap();
        let ct = collision_times(&sc, opts.tau_c_variant);
        let eval = eval_map([sol.omega, sol.omega_ap, sol.nu], &sc, &ct).unwrap();
        assert!((eval.omega - sol.omega).abs() <= opts.tol);
        assert!((eval.omega_ap - sol.omega_ap).abs() <= opts.tol);
        assert!((eval.nu - sol.nu).abs() <= opts.tol);
    }

    #[test]
    fn no_hidden_peers_means_start_invariance() {
        let sc = scenario(12, 0, 256);
        let opts = SolverOpts::default();
        let base = solve_fixed_point(&sc, &opts).unwrap();
        for nu0 in [0.05, 0.5, 0.95] {
            let omega0 = 2.0 / 257.0;
            let sol = solve_fixed_point_from(&sc, &opts, [omega0, omega0, nu0]).unwrap();
            assert_abs_diff_eq!(sol.omega, base.omega, epsilon = 1e-8);
            assert_abs_diff_eq!(sol.omega_ap, base.omega_ap, epsilon = 1e-8);
        }
    }

    #[test]
    fn gain_estimate_limits() {
        let mut sol = FixedPointSolution {
            omega: 0.0,
            omega_ap: 0.02,
            nu: 1.0,
            nu_ap: 0.0,
            alpha: 1.0,
            beta: 0.0,
            p: 0.5,
            alpha_ap: 1.0,
            beta_ap: 0.0,
            p_ap: 0.9,
            y: [0.0; 4],
            z1: 0.0,
            tau_c: 11.0,
            tau_c_ap: 11.0,
            throughput_client: 0.0,
            throughput_ap: 0.0,
            throughput_system: 0.0,
            residual: 0.0,
            iterations: 0,
            n: 10,
        };
        // omega -> 0 with AP traffic flowing: every success is full duplex.
        assert_abs_diff_eq!(sol.gain_estimate().unwrap(), 2.0, epsilon = 1e-12);
        // omega_ap -> 0: only 1/n of exchanges pair up.
        sol.omega = 0.05;
        sol.omega_ap = 0.0;
        assert_abs_diff_eq!(sol.gain_estimate().unwrap(), 1.0 + 1.0 / 10.0, epsilon = 1e-12);
        sol.omega = 0.0;
        assert!(sol.gain_estimate().is_err());
    }

    #[test]
    fn omega_decreases_with_window_growth() {
        let mut last_omega = f64::INFINITY;
        let mut last_ap = f64::INFINITY;
        for cw in [128, 256, 512, 1024, 2048] {
            let sc = scenario(20, 8, cw);
            let sol = solve_fixed_point(&sc, &SolverOpts::default()).unwrap();
            assert!(sol.omega < last_omega, "omega not decreasing at W = {cw}");
            assert!(sol.omega_ap < last_ap, "omega_ap not decreasing at W = {cw}");
            last_omega = sol.omega;
            last_ap = sol.omega_ap;
        }
    }

    #[test]
    fn multi_start_agrees_on_a_reference_point() {
        let sc = scenario(10, 4, 256);
        let report = multi_start_check(&sc, &SolverOpts::default(), 8, 7).unwrap();
        assert!(!report.disagreement, "spread {}", report.max_spread);
    }

    #[test]
    fn uniform_zero_hidden_topology_matches_symmetric_solution() {
        let topo = crate::topology::Topology::ring(10, 20.0, 150.0).unwrap();
        let opts = SolverOpts::default();
        let est = random_topology_estimate(&topo, 256, &timing(), &opts).unwrap();
        let sym = solve_fixed_point(&scenario(10, 0, 256), &opts).unwrap();
        assert_abs_diff_eq!(est.system_throughput, sym.throughput_system, epsilon = 1e-9);
        assert_eq!(est.failures, 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn fixed_points_stay_feasible(
                n in 2usize..=32,
                hidden_frac in 0.0f64..=1.0,
                cw_pow in 5u32..=11,
            ) {
                let cw = 1usize << cw_pow;
                let n_h = ((n - 1) as f64 * hidden_frac).floor() as usize;
                let sc = FdScenario::symmetric(n, n_h, cw, timing()).unwrap();
                let sol = solve_fixed_point(&sc, &SolverOpts::default()).unwrap();
                for (name, v) in [
                    ("omega", sol.omega), ("omega_ap", sol.omega_ap),
                    ("nu", sol.nu), ("nu_ap", sol.nu_ap),
                    ("alpha", sol.alpha), ("beta", sol.beta), ("p", sol.p),
                    ("alpha_ap", sol.alpha_ap), ("beta_ap", sol.beta_ap), ("p_ap", sol.p_ap),
                ] {
                    prop_assert!((0.0..=1.0).contains(&v), "{} = {} out of range", name, v);
                }
                prop_assert!(sol.alpha + sol.beta <= 1.0 + 1e-9);
                prop_assert!(sol.alpha_ap + sol.beta_ap <= 1.0 + 1e-9);
                prop_assert!(sol.residual <= 1e-10);
                prop_assert!(sol.throughput_system >= 0.0);
                if sol.omega * sol.p + sol.omega_ap * sol.p_ap > 0.0 {
                    let g = sol.gain_estimate().unwrap();
                    prop_assert!(g > 1.0 && g <= 2.0, "gain estimate {} out of (1, 2]", g);
                }
            }
        }
    }
}
