//! Half-duplex RTS/CTS baseline: the same head-of-line chain with the
//! full-duplex transitions removed (beta = 0), used as the denominator of
//! the full-duplex gain.
//!
//! An exchange is RTS / CTS / DATA / ACK with SIFS gaps. Collisions happen
//! only among RTS frames: the CTS reserves the channel for everyone in
//! range of the AP, so the vulnerable window of an attempt is the RTS
//! duration and a failed attempt costs the RTS plus a CTS timeout. The
//! published treatment stops at "the chain without full-duplex
//! transitions"; the episode durations and holding times here are this
//! crate's bookkeeping, validated against the slot simulator.

use crate::chain::{self, ChainParams, HoldingTimes};
use crate::fd_model::{FixedPointSolution, SolverOpts};
use crate::timing::HdTiming;
use crate::topology::Topology;
use crate::{Error, Result};

/// Symmetric half-duplex scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct HdScenario {
    pub n: usize,
    pub n_c: usize,
    pub n_h: usize,
    pub cw: usize,
    pub timing: HdTiming,
}

impl HdScenario {
    pub fn new(n: usize, n_c: usize, n_h: usize, cw: usize, timing: HdTiming) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        if n_c + n_h != n - 1 {
            return Err(Error::InvalidParameter(format!(
                "n_c + n_h must equal n - 1 (got {n_c} + {n_h} != {})",
                n - 1
            )));
        }
        if timing.rts < 1 || timing.cts < 1 {
            return Err(Error::InvalidParameter(
                "rts and cts must be at least one slot".into(),
            ));
        }
        if cw < timing.rts as usize {
            return Err(Error::InvalidParameter(format!(
                "contention window {cw} is below the RTS vulnerable period {}",
                timing.rts
            )));
        }
        Ok(HdScenario {
            n,
            n_c,
            n_h,
            cw,
            timing,
        })
    }

    pub fn symmetric(n: usize, n_h: usize, cw: usize, timing: HdTiming) -> Result<Self> {
        if n_h > n.saturating_sub(1) {
            return Err(Error::InvalidParameter(format!(
                "n_h = {n_h} exceeds the peer count {}",
                n.saturating_sub(1)
            )));
        }
        Self::new(n, n - 1 - n_h, n_h, cw, timing)
    }
}

/// Converged half-duplex fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct HdSolution {
    pub omega: f64,
    pub omega_ap: f64,
    /// Probability a client's counter cannot fire within one RTS time.
    pub nu: f64,
    pub alpha: f64,
    pub p: f64,
    pub alpha_ap: f64,
    pub p_ap: f64,
    pub throughput_client: f64,
    pub throughput_ap: f64,
    pub throughput_system: f64,
    pub residual: f64,
    pub iterations: usize,
    pub n: usize,
}

struct HdEval {
    omega: f64,
    omega_ap: f64,
    nu: f64,
    alpha: f64,
    p: f64,
    alpha_ap: f64,
    p_ap: f64,
    client: chain::ChainSolution,
    ap: chain::ChainSolution,
}

fn check_unit(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&v) {
        return Err(Error::Infeasible(format!("{name} = {v} out of [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

fn eval_map(x: [f64; 3], sc: &HdScenario) -> Result<HdEval> {
    let [omega, omega_ap, nu] = x;
    let n = sc.n as f64;
    let n_c = sc.n_c as f64;
    let n_h = sc.n_h as f64;
    let qc = 1.0 - omega;
    let qa = 1.0 - omega_ap;
    let rts = sc.timing.rts as f64;
    let exchange = sc.timing.exchange() as f64;
    let tau_c = rts;

    // Episode-start weights from a client's perspective: an exchange by a
    // covered client (full length), by a hidden client (the observer misses
    // the RTS), or by the AP.
    // Quiet probability squared: the RTS window is vulnerable on both
    // sides, like the header window of the full-duplex model.
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
    let y_covered = n_c * covered_start;
    let y_hidden = n_h * hidden_start;
    let y_ap = omega_ap * qc.powi(sc.n as i32 - 1);
    let y_idle = qc.powi(sc.n_c as i32) * qa * (1.0 - y_hidden);

    let denom = 1.0
        + (exchange - tau_c) * (y_covered + y_ap)
        + (exchange - rts - tau_c) * y_hidden
        + tau_c * (1.0 - y_idle);
    if denom <= 0.0 {
        return Err(Error::Infeasible(format!(
            "half-duplex client idle denominator {denom} <= 0"
        )));
    }
    let alpha = check_unit("alpha", 1.0 / denom)?;
    let p = check_unit("p", qa * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32))?;
    let client = chain::steady_state(&ChainParams::new(alpha, 0.0, p, sc.cw)?)?;

    // AP perspective: every clean client exchange occupies it end to end.
    let z1 = n * omega * qc.powi(sc.n_c as i32) * quiet.powi(sc.n_h as i32);
    let p_ap = check_unit("p_ap", qc.powi(sc.n as i32))?;
    let denom_ap = 1.0 + (exchange - tau_c) * z1 + tau_c * (1.0 - p_ap);
    if denom_ap <= 0.0 {
        return Err(Error::Infeasible(format!(
            "half-duplex AP idle denominator {denom_ap} <= 0"
        )));
    }
    let alpha_ap = check_unit("alpha_ap", 1.0 / denom_ap)?;
    let ap = chain::steady_state(&ChainParams::new(alpha_ap, 0.0, p_ap, sc.cw)?)?;

    // Attempt probabilities are idle-conditioned, matching their use in
    // the channel-state weights above.
    Ok(HdEval {
        omega: client.attempt_given_idle(),
        omega_ap: ap.attempt_given_idle(),
        nu: client.quiet_given_backoff(sc.timing.rts as usize),
        alpha,
        p,
        alpha_ap,
        p_ap,
        client,
        ap,
    })
}

/// Solves the half-duplex fixed point by the same damped Picard iteration
/// as the full-duplex model. The zero beta drives the chain through its
/// u = 1 regime, which the direct balance solve handles exactly.
pub fn solve_hd(sc: &HdScenario, opts: &SolverOpts) -> Result<HdSolution> {
    let omega0 = 2.0 / (sc.cw as f64 + 1.0);
    let mut x = [omega0, omega0, (1.0 - omega0).powi(sc.timing.rts as i32)];
    let mut gamma = opts.damping;
    let mut prev_residual = f64::INFINITY;
    let mut rising = 0u32;

    for iter in 0..opts.max_iters {
        let eval = eval_map(x, sc)?;
        let fx = [eval.omega, eval.omega_ap, eval.nu];
        let residual = x
            .iter()
            .zip(&fx)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if residual <= opts.tol {
            return finalize(sc, x, eval, residual, iter);
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
    sc: &HdScenario,
    x: [f64; 3],
    eval: HdEval,
    residual: f64,
    iterations: usize,
) -> Result<HdSolution> {
    let rts = sc.timing.rts as f64;
    let exchange = sc.timing.exchange() as f64;
    // T is the RTS itself; a success then occupies the rest of the
    // exchange; a failure costs the CTS timeout before the next draw.
    let delta_t = rts;
    let delta_s = exchange - rts;
    let delta_c = (sc.timing.mac.sifs + sc.timing.cts) as f64;

    let client_params = ChainParams::new(eval.alpha, 0.0, eval.p, sc.cw)?;
    let client_lim = chain::limiting_probs(
        &chain::visit_probabilities(&eval.client, &client_params),
        &HoldingTimes::new(&client_params, delta_t, delta_s, delta_c)?,
    )?;
    let ap_params = ChainParams::new(eval.alpha_ap, 0.0, eval.p_ap, sc.cw)?;
    let ap_lim = chain::limiting_probs(
        &chain::visit_probabilities(&eval.ap, &ap_params),
        &HoldingTimes::new(&ap_params, delta_t, delta_s, delta_c)?,
    )?;

    let lp = sc.timing.mac.payload_slots_exact;
    let throughput_client = client_lim.throughput * lp / delta_s;
    let throughput_ap = ap_lim.throughput * lp / delta_s;
    Ok(HdSolution {
        omega: x[0],
        omega_ap: x[1],
        nu: x[2],
        alpha: eval.alpha,
        p: eval.p,
        alpha_ap: eval.alpha_ap,
        p_ap: eval.p_ap,
        throughput_client,
        throughput_ap,
        throughput_system: sc.n as f64 * throughput_client + throughput_ap,
        residual,
        iterations,
        n: sc.n,
    })
}

/// Exact full-duplex gain: the ratio of system throughputs.
pub fn fd_gain(fd: &FixedPointSolution, hd: &HdSolution) -> Result<f64> {
    if hd.throughput_system <= 0.0 {
        return Err(Error::Infeasible(
            "half-duplex system throughput is zero; gain undefined".into(),
        ));
    }
    Ok(fd.throughput_system / hd.throughput_system)
}

/// Per-node averaging over an asymmetric topology, half-duplex flavour.
#[derive(Debug, Clone)]
pub struct HdTopologyEstimate {
    pub system_throughput: f64,
    pub per_node: Vec<std::result::Result<f64, Error>>,
    pub failures: usize,
}

pub fn random_topology_estimate(
    topology: &Topology,
    cw: usize,
    timing: &HdTiming,
    opts: &SolverOpts,
) -> Result<HdTopologyEstimate> {
    let n = topology.n();
    let mut per_node = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut ok = 0usize;
    for i in 0..n {
        let result = HdScenario::new(n, topology.n_c(i), topology.n_h(i), cw, timing.clone())
            .and_then(|sc| solve_hd(&sc, opts))
            .map(|sol| sol.throughput_system);
        if let Ok(v) = &result {
            sum += v;
            ok += 1;
        }
        per_node.push(result);
    }
    if ok == 0 {
        return Err(Error::Infeasible(
            "every per-node solve failed in the topology average".into(),
        ));
    }
    Ok(HdTopologyEstimate {
        system_throughput: sum / ok as f64,
        failures: n - ok,
        per_node,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd_model::{solve_fixed_point, FdScenario};
    use crate::timing::{derive_hd_timing, derive_timing, PhyParams, CTS_BYTES_DEFAULT, RTS_BYTES_DEFAULT};
    use approx::assert_abs_diff_eq;

    fn timing() -> HdTiming {
        derive_hd_timing(&PhyParams::default(), RTS_BYTES_DEFAULT, CTS_BYTES_DEFAULT).unwrap()
    }

    #[test]
    fn success_only_reachable_through_attempts() {
        // With beta = 0 the S state has a single inflow, so pi_S = p pi_T.
        let sc = HdScenario::symmetric(20, 4, 256, timing()).unwrap();
        let sol = solve_hd(&sc, &SolverOpts::default()).unwrap();
        let params = ChainParams::new(sol.alpha, 0.0, sol.p, sc.cw).unwrap();
        let cs = chain::steady_state(&params).unwrap();
        assert_abs_diff_eq!(cs.pi_s, sol.p * cs.pi_t, epsilon = 1e-14);
    }

    #[test]
    fn full_duplex_wins_without_hidden_peers() {
        let opts = SolverOpts::default();
        let hd = solve_hd(&HdScenario::symmetric(20, 0, 1024, timing()).unwrap(), &opts).unwrap();
        let fd = solve_fixed_point(
            &FdScenario::symmetric(20, 0, 1024, derive_timing(&PhyParams::default()).unwrap())
                .unwrap(),
            &opts,
        )
        .unwrap();
        assert!(
            fd.throughput_system > hd.throughput_system,
            "fd {} <= hd {}",
            fd.throughput_system,
            hd.throughput_system
        );
    }

    #[test]
    fn gain_of_identical_inputs_is_one() {
        let opts = SolverOpts::default();
        let fd = solve_fixed_point(
            &FdScenario::symmetric(10, 2, 256, derive_timing(&PhyParams::default()).unwrap())
                .unwrap(),
            &opts,
        )
        .unwrap();
        let mut hd = solve_hd(&HdScenario::symmetric(10, 2, 256, timing()).unwrap(), &opts).unwrap();
        hd.throughput_system = fd.throughput_system;
        assert_abs_diff_eq!(fd_gain(&fd, &hd).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hd_solver_converges_across_the_grid() {
        let opts = SolverOpts::default();
        for n in [2, 8, 20, 32] {
            for cw in [32, 256, 2048] {
                for n_h in [0, (n - 1) / 2] {
                    let sc = HdScenario::symmetric(n, n_h, cw, timing()).unwrap();
                    let sol = solve_hd(&sc, &opts).unwrap();
                    assert!(sol.residual <= opts.tol);
                    assert!(sol.throughput_system > 0.0);
                    assert!((0.0..=1.0).contains(&sol.omega));
                    assert!((0.0..=1.0).contains(&sol.p));
                }
            }
        }
    }

    #[test]
    fn rejects_window_below_rts() {
        assert!(HdScenario::symmetric(10, 0, 8, timing()).is_err());
    }
}
