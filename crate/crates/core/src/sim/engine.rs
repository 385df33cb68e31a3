//! Contention machinery shared by the full- and half-duplex engines:
//! per-node backoff state, the idle-run fast path, sensing, and the
//! per-observer slot tallies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{ChannelState, NodeCounters, SimConfig, SimReport};
use crate::topology::Topology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Contend {
    /// In backoff with this counter; counts down on idle-sensed slots.
    Counting(u32),
    /// Dwelling after a failed attempt; draws a fresh counter at this slot.
    Waiting(u64),
    /// Mid-transmission or mid-exchange; not sensing for contention.
    Active,
}

pub(crate) struct Core {
    /// Client count; the AP is node index `n`.
    pub n: usize,
    /// hear[i]: bitmask over node bits (bit n = AP) audible to node i.
    pub hear: Vec<u64>,
    pub cw: u32,
    pub total: u64,
    pub warmup: u64,
    pub slot: u64,
    pub state: Vec<Contend>,
    pub rng: Vec<ChaCha12Rng>,
    pub tallies: Vec<[u64; 5]>,
    pub counters: Vec<NodeCounters>,
    pub exhaustive_idle: bool,
}

impl Core {
    pub fn new(topology: &Topology, config: &SimConfig) -> Result<Self> {
        let n = topology.n();
        let ap = n;
        let all_clients: u64 = if n == 64 { !0 } else { (1u64 << n) - 1 };
        let mut hear = Vec::with_capacity(n + 1);
        for i in 0..n {
            hear.push(topology.covered_mask(i) | 1 << ap);
        }
        hear.push(all_clients);

        // One independent stream per node keyed off the master seed, so the
        // draw sequence of a node depends only on its own events.
        let mut rng = Vec::with_capacity(n + 1);
        for node in 0..=n {
            let mut r = ChaCha12Rng::seed_from_u64(config.seed);
            r.set_stream(node as u64 + 1);
            rng.push(r);
        }

        let mut core = Core {
            n,
            hear,
            cw: config.cw as u32,
            total: config.total_slots,
            warmup: config.warmup_slots(),
            slot: 0,
            state: vec![Contend::Counting(0); n + 1],
            rng,
            tallies: vec![[0; 5]; n + 1],
            counters: vec![NodeCounters::default(); n + 1],
            exhaustive_idle: config.exhaustive_idle,
        };
        for i in 0..=n {
            let c = core.draw_backoff(i);
            core.state[i] = Contend::Counting(c);
        }
        Ok(core)
    }

    pub fn ap(&self) -> usize {
        self.n
    }

    pub fn draw_backoff(&mut self, node: usize) -> u32 {
        self.rng[node].gen_range(0..self.cw)
    }

    pub fn in_window(&self, slot: u64) -> bool {
        slot >= self.warmup && slot < self.total
    }

    /// Adds `len` slots starting at `start` to an observer's tally,
    /// clipped to the counted window.
    pub fn tally_span(&mut self, obs: usize, state: ChannelState, start: u64, len: u64) {
        let lo = start.max(self.warmup);
        let hi = (start + len).min(self.total);
        if hi > lo {
            self.tallies[obs][state as usize] += hi - lo;
        }
    }

    pub fn add_non_contention(&mut self, node: usize, start: u64, len: u64) {
        let lo = start.max(self.warmup);
        let hi = (start + len).min(self.total);
        if hi > lo {
            self.counters[node].non_contention_slots += hi - lo;
        }
    }

    /// Wakes every waiting node whose dwell ends before `slot`.
    pub fn process_wakes_below(&mut self, slot: u64) {
        for i in 0..=self.n {
            if let Contend::Waiting(until) = self.state[i] {
                if until < slot {
                    let c = self.draw_backoff(i);
                    self.state[i] = Contend::Counting(c);
                }
            }
        }
    }

    /// One sensing step for a contending node at slot `s`. Busy slots
    /// freeze the counter; an idle slot decrements it or, at zero, arms the
    /// node to fire at `s + 1`.
    pub fn step_node(&mut self, i: usize, s: u64, busy: bool, armed: &mut u64) {
        if let Contend::Waiting(until) = self.state[i] {
            if until <= s {
                let c = self.draw_backoff(i);
                self.state[i] = Contend::Counting(c);
            } else {
                return;
            }
        }
        let Contend::Counting(c) = self.state[i] else {
            return;
        };
        if busy {
            return;
        }
        if c == 0 {
            *armed |= 1 << i;
        } else {
            self.state[i] = Contend::Counting(c - 1);
        }
    }

    /// Runs idle contention until some set of nodes fires, returning the
    /// mask of nodes transmitting at the new current slot, or `None` once
    /// the slot budget is exhausted. No transmissions are in flight while
    /// this runs, so every node senses idle and the whole span can be
    /// committed at once; the math mirrors `step_node` exactly and the
    /// `exhaustive_idle` flag forces the one-slot path instead.
    pub fn idle_phase(&mut self) -> Option<u64> {
        loop {
            if self.slot >= self.total {
                return None;
            }
            // Wakes due now.
            for i in 0..=self.n {
                if let Contend::Waiting(until) = self.state[i] {
                    if until <= self.slot {
                        let c = self.draw_backoff(i);
                        self.state[i] = Contend::Counting(c);
                    }
                }
            }
            let mut min_counter: Option<u32> = None;
            let mut min_wake: Option<u64> = None;
            for st in &self.state {
                match *st {
                    Contend::Counting(c) => {
                        min_counter = Some(min_counter.map_or(c, |m| m.min(c)));
                    }
                    Contend::Waiting(u) => {
                        min_wake = Some(min_wake.map_or(u, |m| m.min(u)));
                    }
                    Contend::Active => unreachable!("no transmissions during idle phase"),
                }
            }

            let fire_span = min_counter.map(|c| c as u64 + 1);
            let mut span = fire_span.unwrap_or(u64::MAX);
            if let Some(w) = min_wake {
                span = span.min(w - self.slot);
            }
            span = span.min(self.total - self.slot);
            if self.exhaustive_idle {
                span = span.min(1);
            }
            debug_assert!(span >= 1);

            for obs in 0..=self.n {
                self.tally_span(obs, ChannelState::Idle, self.slot, span);
            }

            let fired = fire_span == Some(span);
            let mut armed = 0u64;
            for i in 0..=self.n {
                if let Contend::Counting(c) = self.state[i] {
                    if fired && c as u64 + 1 == span {
                        // Counted down to zero and saw one more idle slot:
                        // transmits in the first slot after the span.
                        self.state[i] = Contend::Counting(0);
                        armed |= 1 << i;
                    } else {
                        // One decrement per idle slot; a node reaching zero
                        // inside the span has not seen its arming slot yet.
                        self.state[i] = Contend::Counting(c - span.min(c as u64) as u32);
                    }
                }
            }
            self.slot += span;
            if self.slot >= self.total {
                return None;
            }
            if fired {
                return Some(armed);
            }
        }
    }

    pub fn into_report(self, config: &SimConfig, payload_slots_exact: f64) -> SimReport {
        let counted = self.total - self.warmup;
        #[cfg(debug_assertions)]
        for (obs, row) in self.tallies.iter().enumerate() {
            let sum: u64 = row.iter().sum();
            debug_assert_eq!(sum, counted, "tally rows must cover every counted slot (observer {obs})");
        }
        SimReport {
            seed: config.seed,
            cw: config.cw,
            total_slots: self.total,
            warmup_slots: self.warmup,
            counted_slots: counted,
            nodes: self.counters,
            state_slots: self.tallies,
            hidden_collision_episodes: 0,
            hidden_collision_slots: 0,
            payload_slots_exact,
        }
    }
}

/// Bit iteration helper.
pub(crate) fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

pub(crate) fn validate_inputs(topology: &Topology, config: &SimConfig) -> Result<()> {
    config.validate()?;
    // Clients outside AP range are rejected by Topology construction; the
    // check here guards hand-built adjacency files.
    for (i, &(x, y)) in topology.positions().iter().enumerate() {
        let d = (x * x + y * y).sqrt();
        if d > topology.range_m() * (1.0 + 1e-9) {
            return Err(Error::InvalidTopology(format!(
                "client {i} outside AP range"
            )));
        }
    }
    Ok(())
}
