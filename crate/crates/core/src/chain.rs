//! Embedded Markov chain of a head-of-line packet.
//!
//! The chain has states S (success), C (collision), T (header transmission)
//! and backoff states 0..W-1. Per slot, a node in backoff state i counts down
//! to i-1 with probability `alpha` (channel idle), jumps straight to S with
//! probability `beta` (it is the addressee of an incoming header and answers
//! in full duplex), and otherwise stays put. From state 0 an idle slot leads
//! to a transmission attempt T, which succeeds into S with probability `p`
//! or fails into C. Both S and C draw a fresh uniform backoff.
//!
//! The stationary distribution is found by solving the balance equations
//! directly: with q = (pi_S + pi_C) / (W (alpha + beta)) the backoff states
//! satisfy pi_{W-1} = q and pi_i = u pi_{i+1} + q, a forward substitution
//! that stays exact at u = 1 (beta = 0), where the closed-form expressions
//! become 0/0. The closed forms are kept as a consistency oracle away from
//! that singularity.

use crate::{Error, Result};

/// Per-slot transition probabilities and the contention window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    /// Probability of sensing the channel idle in a slot.
    pub alpha: f64,
    /// Probability of entering full-duplex reply mode during backoff.
    pub beta: f64,
    /// Probability that a transmission attempt succeeds.
    pub p: f64,
    /// Contention window; backoff drawn uniformly from [0, W).
    pub cw: usize,
}

impl ChainParams {
    pub fn new(alpha: f64, beta: f64, p: f64, cw: usize) -> Result<Self> {
        let probs = [("alpha", alpha), ("beta", beta), ("p", p)];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        // Tolerate rounding noise on the simplex boundary.
        if alpha + beta > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "alpha + beta must not exceed 1, got {}",
                alpha + beta
            )));
        }
        if cw < 1 {
            return Err(Error::InvalidParameter("contention window must be >= 1".into()));
        }
        Ok(ChainParams { alpha, beta, p, cw })
    }
}

/// Mean holding times per state family, in slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldingTimes {
    /// Backoff states: 1 / (alpha + beta), the mean of the geometric dwell.
    pub backoff: f64,
    pub t: f64,
    pub s: f64,
    pub c: f64,
}

impl HoldingTimes {
    /// Builds holding times with the backoff dwell derived from the chain
    /// rates and explicit T/S/C durations.
    pub fn new(params: &ChainParams, t: f64, s: f64, c: f64) -> Result<Self> {
        if params.alpha + params.beta <= 0.0 {
            return Err(Error::DegenerateChain);
        }
        let h = HoldingTimes {
            backoff: 1.0 / (params.alpha + params.beta),
            t,
            s,
            c,
        };
        for (name, v) in [("t", h.t), ("s", h.s), ("c", h.c), ("backoff", h.backoff)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "holding time {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(h)
    }
}

/// Stationary distribution of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSolution {
    pub pi_s: f64,
    pub pi_c: f64,
    pub pi_t: f64,
    /// Backoff states 0..W-1.
    pub pi_backoff: Vec<f64>,
    /// u = alpha / (alpha + beta).
    pub u: f64,
    /// x = 1 - u^W.
    pub x: f64,
}

impl ChainSolution {
    /// Probability mass of backoff states `from..W`, i.e. the probability
    /// that the counter is too large to reach zero within `from` slots.
    pub fn backoff_tail(&self, from: usize) -> f64 {
        if from >= self.pi_backoff.len() {
            0.0
        } else {
            self.pi_backoff[from..].iter().sum()
        }
    }

    /// Total backoff mass.
    pub fn backoff_total(&self) -> f64 {
        self.pi_backoff.iter().sum()
    }

    /// Probability of attempting in the slot after an idle slot, given the
    /// node is in backoff: counter exhausted among the backoff states.
    pub fn attempt_given_idle(&self) -> f64 {
        self.pi_backoff[0] / self.backoff_total()
    }

    /// Probability that the counter cannot reach zero within `window`
    /// slots, given the node is in backoff.
    pub fn quiet_given_backoff(&self, window: usize) -> f64 {
        self.backoff_tail(window) / self.backoff_total()
    }
}

/// Time-weighted (limiting) probabilities of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitingProbs {
    pub pi_tilde_s: f64,
    pub pi_tilde_c: f64,
    pub pi_tilde_t: f64,
    pub pi_tilde_backoff: f64,
    /// Equal to `pi_tilde_s`: the fraction of time the head-of-line packet
    /// sits in the success state, which is the node's service rate.
    pub throughput: f64,
}

/// Solves the balance equations for the stationary distribution.
///
/// The residual of the balance system is at most 1e-10 in max norm; this is
/// checked in debug builds along with the closed-form oracle away from u = 1.
pub fn steady_state(params: &ChainParams) -> Result<ChainSolution> {
    let ChainParams { alpha, beta, p, cw } = *params;
    let rate = alpha + beta;
    if rate <= 0.0 {
        return Err(Error::DegenerateChain);
    }
    let u = alpha / rate;

    // Unnormalized solve with q = 1.
    let mut pi_backoff = vec![0.0f64; cw];
    pi_backoff[cw - 1] = 1.0;
    for i in (0..cw - 1).rev() {
        pi_backoff[i] = u * pi_backoff[i + 1] + 1.0;
    }
    let sum_backoff: f64 = pi_backoff.iter().sum();
    let pi_t = alpha * pi_backoff[0];
    let pi_c = (1.0 - p) * pi_t;
    let pi_s = p * pi_t + beta * sum_backoff;

    let total = pi_s + pi_c + pi_t + sum_backoff;
    let inv = 1.0 / total;
    for v in &mut pi_backoff {
        *v *= inv;
    }
    let solution = ChainSolution {
        pi_s: pi_s * inv,
        pi_c: pi_c * inv,
        pi_t: pi_t * inv,
        pi_backoff,
        u,
        x: 1.0 - u.powi(cw as i32),
    };

    debug_assert!(
        balance_residual(params, &solution) <= 1e-10,
        "balance residual {} exceeds 1e-10",
        balance_residual(params, &solution)
    );
    #[cfg(debug_assertions)]
    if let Some(cf) = closed_form(params) {
        let d = solution_distance(&solution, &cf);
        debug_assert!(d <= 1e-9, "closed-form disagreement {d}");
    }

    Ok(solution)
}

/// Max-norm residual of the balance equations at `solution`. Zero (up to
/// rounding) for a correct stationary distribution.
pub fn balance_residual(params: &ChainParams, solution: &ChainSolution) -> f64 {
    let ChainParams { alpha, beta, p, cw } = *params;
    let rate = alpha + beta;
    let q = (solution.pi_s + solution.pi_c) / (cw as f64 * rate);
    let u = alpha / rate;
    let mut r: f64 = 0.0;
    r = r.max((solution.pi_backoff[cw - 1] - q).abs());
    for i in 0..cw - 1 {
        r = r.max((solution.pi_backoff[i] - u * solution.pi_backoff[i + 1] - q).abs());
    }
    r = r.max((solution.pi_t - alpha * solution.pi_backoff[0]).abs());
    r = r.max((solution.pi_c - (1.0 - p) * solution.pi_t).abs());
    let sum_backoff = solution.backoff_total();
    r = r.max((solution.pi_s - p * solution.pi_t - beta * sum_backoff).abs());
    r = r.max((solution.pi_s + solution.pi_c + solution.pi_t + sum_backoff - 1.0).abs());
    r
}

/// Closed-form stationary distribution with shared denominator
/// D = W (1-u)(beta+1) - X u (1-beta). Valid only away from u = 1; returns
/// `None` at the singularity.
///
/// Evaluated through the exact factorization of D over geometric prefix
/// sums: with S = sum u^j (j < W) and R = sum of its prefixes,
/// D = (1-u) [ (1-u) R + beta (W + u S) ], and every numerator divides out
/// one (1-u) factor the same way. All terms are positive, so the direct
/// formula's catastrophic cancellation near u = 1 never occurs and the two
/// solution routes can be compared at full precision.
pub fn closed_form(params: &ChainParams) -> Option<ChainSolution> {
    let ChainParams { alpha, beta, p, cw } = *params;
    let rate = alpha + beta;
    if rate <= 0.0 {
        return None;
    }
    let u = alpha / rate;
    if u >= 1.0 - 1e-9 {
        return None;
    }
    let one_minus_u = beta / rate;

    // prefix[j] = 1 + u + ... + u^(j-1); prefix[cw] = S.
    let mut prefix = vec![0.0f64; cw + 1];
    let mut power = 1.0;
    for j in 1..=cw {
        prefix[j] = prefix[j - 1] + power;
        power *= u;
    }
    let s = prefix[cw];
    let r: f64 = prefix[1..=cw].iter().sum();
    let w = cw as f64;

    // D / (1-u); positive whenever beta > 0, which u < 1 guarantees.
    let denom = one_minus_u * r + beta * (w + u * s);
    if denom <= 0.0 {
        return None;
    }
    let pi_t = u * s * beta / denom;
    let pi_c = pi_t * (1.0 - p);
    let pi_s = beta * (one_minus_u * r + u * s * p) / denom;
    let pi_backoff: Vec<f64> = (0..cw)
        .map(|i| one_minus_u * prefix[cw - i] / denom)
        .collect();
    Some(ChainSolution {
        pi_s,
        pi_c,
        pi_t,
        pi_backoff,
        u,
        x: 1.0 - u.powi(cw as i32),
    })
}

/// Max-norm distance between two stationary distributions.
pub fn solution_distance(a: &ChainSolution, b: &ChainSolution) -> f64 {
    let mut d = (a.pi_s - b.pi_s)
        .abs()
        .max((a.pi_c - b.pi_c).abs())
        .max((a.pi_t - b.pi_t).abs());
    for (x, y) in a.pi_backoff.iter().zip(&b.pi_backoff) {
        d = d.max((x - y).abs());
    }
    d
}

/// Converts the per-slot stationary distribution into per-visit (entry)
/// probabilities. The balance equations give each backoff state a self-loop
/// of weight 1 - alpha - beta, so its stationary mass counts slots; state
/// entries occur at rate pi_i (alpha + beta) there, while T, S and C are
/// entered once per step. Pairing these visit probabilities with the mean
/// dwells of [`HoldingTimes`] yields the renewal process the holding times
/// describe; skipping the conversion would count backoff dwell twice.
pub fn visit_probabilities(solution: &ChainSolution, params: &ChainParams) -> ChainSolution {
    let rate = params.alpha + params.beta;
    let mut pi_backoff: Vec<f64> = solution.pi_backoff.iter().map(|&v| v * rate).collect();
    let total: f64 =
        solution.pi_s + solution.pi_c + solution.pi_t + pi_backoff.iter().sum::<f64>();
    let inv = 1.0 / total;
    for v in &mut pi_backoff {
        *v *= inv;
    }
    ChainSolution {
        pi_s: solution.pi_s * inv,
        pi_c: solution.pi_c * inv,
        pi_t: solution.pi_t * inv,
        pi_backoff,
        u: solution.u,
        x: solution.x,
    }
}

/// Reweights the stationary distribution by mean holding times:
/// pi_tilde_j = pi_j d_j / sum_i pi_i d_i.
pub fn limiting_probs(solution: &ChainSolution, delta: &HoldingTimes) -> Result<LimitingProbs> {
    for v in [delta.backoff, delta.t, delta.s, delta.c] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "holding times must be positive and finite, got {v}"
            )));
        }
    }
    let backoff_mass = solution.backoff_total() * delta.backoff;
    let ws = solution.pi_s * delta.s;
    let wc = solution.pi_c * delta.c;
    let wt = solution.pi_t * delta.t;
    let total = ws + wc + wt + backoff_mass;
    let pi_tilde_s = ws / total;
    Ok(LimitingProbs {
        pi_tilde_s,
        pi_tilde_c: wc / total,
        pi_tilde_t: wt / total,
        pi_tilde_backoff: backoff_mass / total,
        throughput: pi_tilde_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_exact_case() {
        // alpha = 1, beta = 0, p = 1, W = 2: the chain cycles
        // S -> {0 or 1} -> T -> S, giving pi_S = pi_T = pi_0 = 2/7, pi_1 = 1/7.
        let params = ChainParams::new(1.0, 0.0, 1.0, 2).unwrap();
        let sol = steady_state(&params).unwrap();
        assert_abs_diff_eq!(sol.pi_s, 2.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.pi_t, 2.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.pi_backoff[0], 2.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.pi_backoff[1], 1.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.pi_c, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_no_exit() {
        let params = ChainParams::new(0.0, 0.0, 0.5, 8).unwrap();
        assert!(matches!(steady_state(&params), Err(Error::DegenerateChain)));
    }

    #[test]
    fn closed_form_matches_direct_solve() {
        let params = ChainParams::new(0.4, 0.2, 0.7, 8).unwrap();
        let direct = steady_state(&params).unwrap();
        let cf = closed_form(&params).unwrap();
        assert!(solution_distance(&direct, &cf) < 1e-12);
    }

    #[test]
    fn limiting_probs_equal_weights_are_identity() {
        let params = ChainParams::new(0.5, 0.1, 0.8, 4).unwrap();
        let sol = steady_state(&params).unwrap();
        let delta = HoldingTimes {
            backoff: 1.0,
            t: 1.0,
            s: 1.0,
            c: 1.0,
        };
        let lim = limiting_probs(&sol, &delta).unwrap();
        assert_abs_diff_eq!(lim.pi_tilde_s, sol.pi_s, epsilon = 1e-12);
        assert_abs_diff_eq!(lim.pi_tilde_t, sol.pi_t, epsilon = 1e-12);
    }

    #[test]
    fn doubling_own_weight_raises_own_share() {
        let params = ChainParams::new(0.5, 0.1, 0.8, 4).unwrap();
        let sol = steady_state(&params).unwrap();
        let base = HoldingTimes {
            backoff: 2.0,
            t: 11.0,
            s: 50.0,
            c: 3.0,
        };
        let mut doubled = base;
        doubled.s *= 2.0;
        let l0 = limiting_probs(&sol, &base).unwrap();
        let l1 = limiting_probs(&sol, &doubled).unwrap();
        assert!(l1.pi_tilde_s > l0.pi_tilde_s);
    }

    #[test]
    fn weighted_renormalization_by_hand() {
        // pi from the alpha=1, beta=0, p=1, W=2 case with
        // delta_T = 11, delta_S = 51, delta_C = 1, backoff = 1:
        // weights {S: 102/7, T: 22/7, backoff: 3/7}, total 127/7.
        let params = ChainParams::new(1.0, 0.0, 1.0, 2).unwrap();
        let sol = steady_state(&params).unwrap();
        let delta = HoldingTimes {
            backoff: 1.0,
            t: 11.0,
            s: 51.0,
            c: 1.0,
        };
        let lim = limiting_probs(&sol, &delta).unwrap();
        assert_abs_diff_eq!(lim.pi_tilde_s, 102.0 / 127.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lim.pi_tilde_t, 22.0 / 127.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lim.pi_tilde_backoff, 3.0 / 127.0, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_params() -> impl Strategy<Value = ChainParams> {
            (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 1usize..32).prop_filter_map(
                "alpha + beta must be positive and at most 1",
                |(a, scale, p, cw)| {
                    let b = (1.0 - a) * scale;
                    if a + b > 0.0 {
                        Some(ChainParams { alpha: a, beta: b, p, cw })
                    } else {
                        None
                    }
                },
            )
        }

        proptest! {
            #[test]
            fn normalization_holds(params in arb_params()) {
                let sol = steady_state(&params).unwrap();
                let total = sol.pi_s + sol.pi_c + sol.pi_t + sol.pi_backoff.iter().sum::<f64>();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(sol.pi_s >= 0.0 && sol.pi_c >= 0.0 && sol.pi_t >= 0.0);
                prop_assert!(sol.pi_backoff.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }

            #[test]
            fn attempt_rate_identity(params in arb_params()) {
                // pi_T = alpha * pi_0 exactly.
                let sol = steady_state(&params).unwrap();
                prop_assert!((sol.pi_t - params.alpha * sol.pi_backoff[0]).abs() <= 1e-14);
            }

            #[test]
            fn no_failures_without_collisions(alpha in 0.01f64..=1.0, cw in 1usize..32) {
                // beta = 0 and p = 1 leave state C unreachable.
                let params = ChainParams::new(alpha, 0.0, 1.0, cw).unwrap();
                let sol = steady_state(&params).unwrap();
                prop_assert!(sol.pi_c.abs() <= 1e-15);
            }

            #[test]
            fn balance_residual_is_tiny(params in arb_params()) {
                let sol = steady_state(&params).unwrap();
                prop_assert!(balance_residual(&params, &sol) <= 1e-10);
            }

            #[test]
            fn closed_form_agreement_away_from_singularity(params in arb_params()) {
                let sol = steady_state(&params).unwrap();
                if sol.u < 1.0 - 1e-6 {
                    if let Some(cf) = closed_form(&params) {
                        prop_assert!(solution_distance(&sol, &cf) <= 1e-9);
                    }
                }
            }
        }
    }
}
