//! Half-duplex RTS/CTS baseline engine.
//!
//! A contention winner sends an RTS to the AP; a clean RTS is answered by a
//! CTS after SIFS, then DATA and ACK complete the exchange. The CTS (and
//! the AP's own RTS on the downlink) carries the exchange duration, and
//! every client honors that reservation, so once the CTS is out the
//! exchange cannot be disturbed: collisions happen only among RTS frames.
//! A transmitter that gets no CTS infers the loss after a CTS-timeout
//! (SIFS + CTS) and redraws its backoff. Hidden terminals may still fire
//! during the RTS itself, which is the vulnerable window of this protocol.

use std::io::Write;

use super::engine::{bits, validate_inputs, Contend, Core};
use super::{trace_event, ChannelState, SimConfig, SimReport};
use crate::timing::HdTiming;
use crate::topology::Topology;
use crate::Result;

/// Runs the RTS/CTS baseline over `topology`.
pub fn run_hd_rtscts(
    topology: &Topology,
    timing: &HdTiming,
    config: &SimConfig,
) -> Result<SimReport> {
    run_hd_traced(topology, timing, config, None)
}

/// As [`run_hd_rtscts`] with an optional `slot,node,event` trace sink.
pub fn run_hd_traced(
    topology: &Topology,
    timing: &HdTiming,
    config: &SimConfig,
    trace: Option<&mut dyn Write>,
) -> Result<SimReport> {
    validate_inputs(topology, config)?;
    let mut engine = HdEngine {
        core: Core::new(topology, config)?,
        t: timing.clone(),
        ap_hol: 0,
        hidden_episodes: 0,
        hidden_slots: 0,
        trace,
    };
    engine.ap_hol = engine.draw_hol();

    let mut armed = 0u64;
    loop {
        if armed == 0 {
            match engine.core.idle_phase() {
                Some(a) => armed = a,
                None => break,
            }
        }
        if engine.core.slot >= engine.core.total {
            break;
        }
        armed = engine.resolve(armed);
    }

    let hidden_episodes = engine.hidden_episodes;
    let hidden_slots = engine.hidden_slots;
    let mut report = engine
        .core
        .into_report(config, timing.mac.payload_slots_exact);
    report.hidden_collision_episodes = hidden_episodes;
    report.hidden_collision_slots = hidden_slots;
    Ok(report)
}

struct RtsTx {
    node: usize,
    rts_left: u32,
    start: u64,
    stopped: bool,
    stop_slot: u64,
}

struct HdEngine<'a> {
    core: Core,
    t: HdTiming,
    ap_hol: usize,
    hidden_episodes: u64,
    hidden_slots: u64,
    trace: Option<&'a mut dyn Write>,
}

impl<'a> HdEngine<'a> {
    fn ap(&self) -> usize {
        self.core.ap()
    }

    fn draw_hol(&mut self) -> usize {
        use rand::Rng;
        let ap = self.ap();
        self.core.rng[ap].gen_range(0..self.core.n)
    }

    fn timeout_dwell(&self) -> u64 {
        (self.t.mac.sifs + self.t.cts) as u64
    }

    fn count_attempt(&mut self, node: usize, slot: u64) {
        if self.core.in_window(slot) {
            self.core.counters[node].header_attempts += 1;
        }
        trace_event(&mut self.trace, slot, node, "rts_start");
    }

    fn resolve(&mut self, fired: u64) -> u64 {
        let slot = self.core.slot;
        let ap_bit = 1u64 << self.ap();
        for node in bits(fired) {
            self.core.state[node] = Contend::Active;
            self.count_attempt(node, slot);
        }
        if fired == ap_bit {
            self.commit_exchange(self.ap(), &[]);
            0
        } else if fired & ap_bit == 0 && fired.count_ones() == 1 {
            self.rts_phase(fired.trailing_zeros() as usize)
        } else {
            let colliders = bits(fired)
                .map(|node| RtsTx {
                    node,
                    rts_left: self.t.rts,
                    start: slot,
                    stopped: false,
                    stop_slot: 0,
                })
                .collect();
            self.rts_collision_phase(colliders, slot)
        }
    }

    /// Client `k` transmits its RTS; hidden peers keep counting down and
    /// may fire into it. A node firing exactly when the RTS ends no longer
    /// corrupts anything at the AP (which is already turning the CTS
    /// around) and only wastes its own attempt.
    fn rts_phase(&mut self, k: usize) -> u64 {
        let e0 = self.core.slot;
        let rts = self.t.rts;
        let k_bit = 1u64 << k;
        let mut armed = 0u64;

        for off in 0..rts {
            let s = e0 + off as u64;
            if armed != 0 {
                return self.enter_collision_from_rts(k, e0, s, armed);
            }
            for i in 0..=self.core.n {
                if i == k {
                    continue;
                }
                if self.core.hear[i] & k_bit != 0 {
                    continue;
                }
                self.core.tally_span(i, ChannelState::Idle, s, 1);
                self.core.step_node(i, s, false, &mut armed);
            }
        }

        // Fires at e0 + rts overlap the CTS turnaround, not the RTS. With
        // long control frames they would reach into the DATA; fail the
        // whole attempt in that unusual regime.
        if armed != 0 && self.t.rts > 2 * self.t.mac.sifs + self.t.cts {
            let s = e0 + rts as u64;
            let k_bit = 1u64 << k;
            for obs in 0..=self.core.n {
                if obs == k || self.core.hear[obs] & k_bit != 0 {
                    self.core.tally_span(obs, ChannelState::Collision, e0, rts as u64);
                }
            }
            let wake = s + self.timeout_dwell();
            self.core.state[k] = Contend::Waiting(wake);
            self.core.add_non_contention(k, e0, wake - e0);
            if self.core.in_window(s - 1) {
                self.core.counters[k].hidden_collisions += 1;
            }
            let colliders = bits(armed)
                .map(|j| {
                    self.core.state[j] = Contend::Active;
                    self.count_attempt(j, s);
                    RtsTx {
                        node: j,
                        rts_left: self.t.rts,
                        start: s,
                        stopped: false,
                        stop_slot: 0,
                    }
                })
                .collect();
            self.core.slot = s;
            return self.rts_collision_phase(colliders, e0);
        }
        let doomed: Vec<usize> = bits(armed).collect();
        self.commit_exchange(k, &doomed);
        0
    }

    fn enter_collision_from_rts(&mut self, k: usize, e0: u64, s: u64, joiners: u64) -> u64 {
        let k_bit = 1u64 << k;
        let elapsed = s - e0;
        for obs in 0..=self.core.n {
            if obs == k || self.core.hear[obs] & k_bit != 0 {
                self.core.tally_span(obs, ChannelState::Collision, e0, elapsed);
            }
        }
        let mut colliders = vec![RtsTx {
            node: k,
            rts_left: self.t.rts - elapsed.min(self.t.rts as u64) as u32,
            start: e0,
            stopped: false,
            stop_slot: 0,
        }];
        for j in bits(joiners) {
            self.core.state[j] = Contend::Active;
            self.count_attempt(j, s);
            trace_event(&mut self.trace, s, j, "join");
            colliders.push(RtsTx {
                node: j,
                rts_left: self.t.rts,
                start: s,
                stopped: false,
                stop_slot: 0,
            });
        }
        self.core.slot = s;
        self.rts_collision_phase(colliders, e0)
    }

    /// Overlapping RTS frames. Half-duplex transmitters cannot sense while
    /// sending, so every collider plays its RTS out in full and learns of
    /// the loss only when its CTS fails to appear.
    fn rts_collision_phase(&mut self, mut colliders: Vec<RtsTx>, first_emission: u64) -> u64 {
        let mut armed = 0u64;
        let mut last_emission = first_emission;

        loop {
            let s = self.core.slot;
            let emitting_any = colliders.iter().any(|c| !c.stopped);
            if armed != 0 {
                if !emitting_any {
                    self.finish_episode(&colliders, first_emission, last_emission);
                    return armed;
                }
                for j in bits(armed) {
                    self.core.state[j] = Contend::Active;
                    self.count_attempt(j, s);
                    trace_event(&mut self.trace, s, j, "join");
                    colliders.push(RtsTx {
                        node: j,
                        rts_left: self.t.rts,
                        start: s,
                        stopped: false,
                        stop_slot: 0,
                    });
                }
                armed = 0;
            } else if !emitting_any {
                self.finish_episode(&colliders, first_emission, last_emission);
                return 0;
            }

            let emit_mask: u64 = colliders
                .iter()
                .filter(|c| !c.stopped)
                .fold(0, |m, c| m | 1 << c.node);
            if emit_mask != 0 {
                last_emission = s;
            }

            for i in 0..=self.core.n {
                if matches!(self.core.state[i], Contend::Active) {
                    self.core.tally_span(i, ChannelState::Collision, s, 1);
                    continue;
                }
                if self.core.hear[i] & emit_mask != 0 {
                    self.core.tally_span(i, ChannelState::Collision, s, 1);
                } else {
                    self.core.tally_span(i, ChannelState::Idle, s, 1);
                    self.core.step_node(i, s, false, &mut armed);
                }
            }

            for idx in 0..colliders.len() {
                if colliders[idx].stopped {
                    continue;
                }
                colliders[idx].rts_left -= 1;
                if colliders[idx].rts_left == 0 {
                    let node = colliders[idx].node;
                    let start = colliders[idx].start;
                    colliders[idx].stopped = true;
                    colliders[idx].stop_slot = s;
                    let wake = s + 1 + self.timeout_dwell();
                    self.core.state[node] = Contend::Waiting(wake);
                    self.core.add_non_contention(node, start, wake - start);
                    if self.core.in_window(s) {
                        // Same-slot starters within earshot could in
                        // principle be told apart, but a half-duplex radio
                        // learns either way by timeout; classify by
                        // geometry.
                        let covered = colliders.iter().any(|o| {
                            o.node != node
                                && o.start == start
                                && self.core.hear[node] >> o.node & 1 == 1
                        });
                        if covered {
                            self.core.counters[node].covered_collisions += 1;
                        } else {
                            self.core.counters[node].hidden_collisions += 1;
                        }
                    }
                    trace_event(&mut self.trace, s, node, "rts_timeout");
                }
            }

            self.core.slot = s + 1;
        }
    }

    /// Duration of the leading hidden pair, as in the full-duplex engine.
    fn finish_episode(&mut self, colliders: &[RtsTx], _first: u64, _last: u64) {
        if colliders.len() < 2 {
            return;
        }
        let (a, b) = (&colliders[0], &colliders[1]);
        let mutually_hidden = self.core.hear[a.node] >> b.node & 1 == 0 && a.node != b.node;
        if !mutually_hidden {
            return;
        }
        let end = a.stop_slot.max(b.stop_slot);
        if a.start >= self.core.warmup && end < self.core.total {
            self.hidden_episodes += 1;
            self.hidden_slots += end - a.start + 1;
        }
    }

    /// Commits a reserved exchange. `initiator` is the AP for downlink
    /// traffic, a client otherwise; `doomed` are clients whose RTS fired
    /// into the CTS turnaround, wasting the attempt without hurting the
    /// exchange. The reservation freezes every client, so the whole block
    /// commits at once.
    fn commit_exchange(&mut self, initiator: usize, doomed: &[usize]) {
        let e0 = self.core.slot;
        let ap = self.ap();
        let rts = self.t.rts as u64;
        let len = self.t.exchange() as u64;
        let end = e0 + len;
        let downlink = initiator == ap;
        let init_bit = 1u64 << initiator;

        for obs in 0..=self.core.n {
            if obs == initiator || self.core.hear[obs] & init_bit != 0 {
                self.core.tally_span(obs, ChannelState::Hd, e0, len);
            } else {
                // Audible from the CTS turnaround on; the reservation
                // covers the gaps in between.
                self.core.tally_span(obs, ChannelState::Hd, e0 + rts, len - rts);
            }
        }

        if self.core.in_window(end - 1) {
            let c = &mut self.core.counters[initiator];
            c.header_successes += 1;
            c.hd_success += 1;
            c.delivered_packets += 1;
            if !downlink {
                self.core.counters[ap].hd_success += 1;
            }
        }
        self.core.add_non_contention(initiator, e0, len);
        trace_event(
            &mut self.trace,
            e0,
            initiator,
            if downlink { "hd_downlink" } else { "hd_uplink" },
        );

        for &m in doomed {
            // Their RTS rides over the reservation unanswered; they learn
            // by timeout like any collider.
            self.count_attempt(m, e0 + rts);
            let stop = e0 + 2 * rts - 1;
            let wake = stop + 1 + self.timeout_dwell();
            self.core.state[m] = Contend::Waiting(wake);
            self.core.add_non_contention(m, e0 + rts, wake - (e0 + rts));
            if self.core.in_window(stop) {
                self.core.counters[m].hidden_collisions += 1;
            }
            trace_event(&mut self.trace, e0 + rts, m, "rts_doomed");
        }

        let c = self.core.draw_backoff(initiator);
        self.core.state[initiator] = Contend::Counting(c);
        if downlink {
            self.ap_hol = self.draw_hol();
        }
        self.core.process_wakes_below(end);
        self.core.slot = end;
    }
}
