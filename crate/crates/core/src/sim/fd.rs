//! Full-duplex protocol engine.
//!
//! A client with an exhausted backoff transmits its packet (header then
//! payload) to the AP. If the header arrives clean, the AP answers in the
//! next slot: with its own packet when its head-of-line destination is the
//! sender (both packets complete in one `tau_F` exchange), otherwise with a
//! busy tone through the end of the client's packet and an ACK (`tau_H`).
//! An AP-initiated transmission is always answered in kind by its target,
//! since clients only ever queue traffic for the AP.
//!
//! Hidden terminals can still fire during the header-long vulnerable
//! window. A transmitter sends its payload only under an AP reply, so every
//! collided header ends after exactly one header time; the channel tied up
//! by a collision runs from the first header's start to the last one's end.
//! Colliding nodes cannot retry on silence alone (hidden peers would keep
//! stumbling over each other), so the AP broadcasts a one-slot collision
//! notification once the colliding headers have drained, and a collider
//! redraws its backoff only after hearing it. A node that started later
//! therefore waits about half a header past its own transmission, which is
//! the recovery cost the analytical holding times assume.

use std::io::Write;

use super::engine::{bits, validate_inputs, Contend, Core};
use super::{trace_event, ChannelState, SimConfig, SimReport};
use crate::timing::MacTiming;
use crate::topology::Topology;
use crate::Result;

/// Runs the full-duplex MAC over `topology` and reports the counters.
pub fn run_fd(topology: &Topology, timing: &MacTiming, config: &SimConfig) -> Result<SimReport> {
    run_fd_traced(topology, timing, config, None)
}

/// As [`run_fd`] with an optional `slot,node,event` trace sink.
pub fn run_fd_traced(
    topology: &Topology,
    timing: &MacTiming,
    config: &SimConfig,
    trace: Option<&mut dyn Write>,
) -> Result<SimReport> {
    validate_inputs(topology, config)?;
    let mut engine = FdEngine {
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
        .into_report(config, timing.payload_slots_exact);
    report.hidden_collision_episodes = hidden_episodes;
    report.hidden_collision_slots = hidden_slots;
    Ok(report)
}

struct Collider {
    node: usize,
    header_left: u32,
    start: u64,
    /// Started simultaneously with a peer it can hear: a covered loss
    /// rather than a hidden one, for the counters.
    covered_class: bool,
    /// Heard the notification while still transmitting; releases itself
    /// at its header end without waiting for another one.
    notified_in_header: bool,
    stopped: bool,
    stop_slot: u64,
    /// Redraw scheduled; the head-of-line packet sits in its failed state
    /// until the notification arrives.
    released: bool,
}

struct FdEngine<'a> {
    core: Core,
    t: MacTiming,
    ap_hol: usize,
    hidden_episodes: u64,
    hidden_slots: u64,
    trace: Option<&'a mut dyn Write>,
}

impl<'a> FdEngine<'a> {
    fn ap(&self) -> usize {
        self.core.ap()
    }

    fn draw_hol(&mut self) -> usize {
        use rand::Rng;
        let ap = self.ap();
        self.core.rng[ap].gen_range(0..self.core.n)
    }

    fn count_attempt(&mut self, node: usize, slot: u64) {
        if self.core.in_window(slot) {
            self.core.counters[node].header_attempts += 1;
        }
        trace_event(&mut self.trace, slot, node, "tx_start");
    }

    /// Dispatches the set of nodes firing at the current slot. Returns the
    /// armed mask for the slot the engine lands on afterwards.
    fn resolve(&mut self, fired: u64) -> u64 {
        let slot = self.core.slot;
        let ap_bit = 1u64 << self.ap();
        for node in bits(fired) {
            self.core.state[node] = Contend::Active;
            self.count_attempt(node, slot);
        }
        let clients = fired & !ap_bit;
        if fired == ap_bit {
            self.commit_fd2();
            0
        } else if fired == clients && clients.count_ones() == 1 {
            self.header_phase(clients.trailing_zeros() as usize)
        } else {
            let mut colliders: Vec<Collider> = bits(fired)
                .map(|node| Collider {
                    node,
                    header_left: self.t.header,
                    start: slot,
                    covered_class: false,
                    notified_in_header: false,
                    stopped: false,
                    stop_slot: 0,
                    released: false,
                })
                .collect();
            self.mark_same_slot_class(&mut colliders, slot);
            self.collision_phase(colliders, slot)
        }
    }

    /// AP-initiated exchange. Every client hears the AP from the first
    /// slot, so once it starts alone nothing can disturb it: the target
    /// replies in full duplex after the header and the whole exchange
    /// commits in one block.
    fn commit_fd2(&mut self) {
        let e0 = self.core.slot;
        let len = self.t.fd_exchange as u64;
        let end = e0 + len;
        let ap = self.ap();
        let target = self.ap_hol;

        for obs in 0..=self.core.n {
            self.core.tally_span(obs, ChannelState::Fd, e0, len);
        }
        if self.core.in_window(end - 1) {
            let c = &mut self.core.counters[ap];
            c.header_successes += 1;
            c.fd_success += 1;
            c.delivered_packets += 1;
            let c = &mut self.core.counters[target];
            c.fd_success += 1;
            c.fd_entries += 1;
            c.delivered_packets += 1;
        }
        self.core.add_non_contention(ap, e0, len);
        self.core
            .add_non_contention(target, e0 + self.t.header as u64, len - self.t.header as u64);
        trace_event(&mut self.trace, e0, ap, "fd2");

        let c = self.core.draw_backoff(ap);
        self.core.state[ap] = Contend::Counting(c);
        self.ap_hol = self.draw_hol();
        let c = self.core.draw_backoff(target);
        self.core.state[target] = Contend::Counting(c);
        self.core.process_wakes_below(end);
        self.core.slot = end;
    }

    /// Client `k` transmits its header. Nodes hidden from `k` keep sensing
    /// idle and may fire into the vulnerable window, which spans the header
    /// plus the reply boundary; the AP answers in the slot after a clean
    /// header, after which the exchange is audible to everyone and commits.
    fn header_phase(&mut self, k: usize) -> u64 {
        let e0 = self.core.slot;
        let h = self.t.header;
        let k_bit = 1u64 << k;
        let mut armed = 0u64;

        for off in 0..h {
            let s = e0 + off as u64;
            if armed != 0 {
                return self.enter_collision_from_header(k, e0, s, armed);
            }
            for i in 0..=self.core.n {
                if i == k {
                    continue;
                }
                if self.core.hear[i] & k_bit != 0 {
                    // Frozen; the busy span is booked when the outcome is
                    // known.
                    continue;
                }
                self.core.tally_span(i, ChannelState::Idle, s, 1);
                self.core.step_node(i, s, false, &mut armed);
            }
        }
        if armed != 0 {
            // Fires at e0 + h, overlapping the AP's reply boundary.
            return self.enter_collision_from_header(k, e0, e0 + h as u64, armed);
        }

        if self.ap_hol == k {
            self.commit_exchange(k, true);
        } else {
            self.commit_exchange(k, false);
        }
        0
    }

    fn enter_collision_from_header(&mut self, k: usize, e0: u64, s: u64, joiners: u64) -> u64 {
        let k_bit = 1u64 << k;
        let elapsed = s - e0;
        // The clean-looking header slots retroactively belong to the
        // collision episode for everyone who heard them.
        for obs in 0..=self.core.n {
            if obs == k || self.core.hear[obs] & k_bit != 0 {
                self.core.tally_span(obs, ChannelState::Collision, e0, elapsed);
            }
        }
        // A join at the reply boundary leaves k's header complete but
        // unanswered; k is already waiting for the notification.
        let header_done = elapsed >= self.t.header as u64;
        let mut colliders = vec![Collider {
            node: k,
            header_left: self.t.header - elapsed.min(self.t.header as u64) as u32,
            start: e0,
            covered_class: false,
            notified_in_header: false,
            stopped: header_done,
            stop_slot: if header_done { s - 1 } else { 0 },
            released: false,
        }];
        for j in bits(joiners) {
            self.core.state[j] = Contend::Active;
            self.count_attempt(j, s);
            trace_event(&mut self.trace, s, j, "join");
            colliders.push(Collider {
                node: j,
                header_left: self.t.header,
                start: s,
                covered_class: false,
                notified_in_header: false,
                stopped: false,
                stop_slot: 0,
                released: false,
            });
        }
        // Joiners fired off idle sensing, so they are hidden from k; but
        // two joiners in the same slot may hear each other.
        self.mark_same_slot_class(&mut colliders, s);
        self.core.slot = s;
        self.collision_phase(colliders, e0)
    }

    /// Colliders that started in the same slot within earshot of each other
    /// count as covered losses; everything else is a hidden loss.
    fn mark_same_slot_class(&self, colliders: &mut [Collider], slot: u64) {
        let group: Vec<usize> = colliders
            .iter()
            .filter(|c| c.start == slot)
            .map(|c| c.node)
            .collect();
        for c in colliders.iter_mut() {
            if c.start != slot {
                continue;
            }
            for &other in &group {
                if other != c.node && self.core.hear[c.node] >> other & 1 == 1 {
                    c.covered_class = true;
                }
            }
        }
    }

    /// Per-slot resolution of a collision episode. Colliding headers play
    /// out in full (payload is only ever sent under an AP reply), the AP
    /// broadcasts its one-slot notification once the last colliding header
    /// has drained, and every collider redraws its backoff one slot after
    /// hearing it. Bystanders keep sensing throughout, so hidden terminals
    /// may pile in and push the notification further out. Ends when the
    /// channel is silent and nobody is waiting on a notification.
    fn collision_phase(&mut self, mut colliders: Vec<Collider>, first_emission: u64) -> u64 {
        let ap = self.ap();
        let ap_bit = 1u64 << ap;
        let h = self.t.header as u64;
        // The notification follows the newest colliding header.
        let mut pending_notify = colliders
            .iter()
            .map(|c| c.start + h)
            .max()
            .map(|t| t.max(self.core.slot + 1));
        let mut last_emission = first_emission;
        let mut armed = 0u64;

        loop {
            let s = self.core.slot;
            let notify_now = pending_notify == Some(s);
            if notify_now {
                pending_notify = None;
                if self.core.in_window(s) {
                    self.core.counters[ap].collision_notifications += 1;
                }
                trace_event(&mut self.trace, s, ap, "notify");
            }

            let emitting_any = colliders.iter().any(|c| !c.stopped);
            let awaiting_any = colliders.iter().any(|c| c.stopped && !c.released);
            if armed != 0 {
                if !emitting_any && !awaiting_any && !notify_now && pending_notify.is_none() {
                    // The episode has fully drained: these are fresh, clean
                    // attempts for the dispatcher.
                    self.finish_episode(&colliders, first_emission, last_emission);
                    return armed;
                }
                for j in bits(armed) {
                    self.core.state[j] = Contend::Active;
                    self.count_attempt(j, s);
                    trace_event(&mut self.trace, s, j, "join");
                    colliders.push(Collider {
                        node: j,
                        header_left: self.t.header,
                        start: s,
                        covered_class: false,
                        notified_in_header: false,
                        stopped: false,
                        stop_slot: 0,
                        released: false,
                    });
                    let target = s + h;
                    pending_notify = Some(pending_notify.map_or(target, |t| t.max(target)));
                }
                self.mark_same_slot_class(&mut colliders, s);
                armed = 0;
            } else if !emitting_any && !awaiting_any && !notify_now && pending_notify.is_none() {
                self.finish_episode(&colliders, first_emission, last_emission);
                return 0;
            }

            if notify_now {
                for idx in 0..colliders.len() {
                    if colliders[idx].stopped && !colliders[idx].released {
                        self.release_collider(idx, &mut colliders, s + 1);
                    } else if !colliders[idx].stopped {
                        // Still transmitting: it heard the word and frees
                        // itself at its own header end.
                        colliders[idx].notified_in_header = true;
                    }
                }
            }

            let emit_mask: u64 = colliders
                .iter()
                .filter(|c| !c.stopped)
                .fold(0, |m, c| m | 1 << c.node);
            if emit_mask != 0 {
                last_emission = s;
            }

            let sense_mask = emit_mask | if notify_now { ap_bit } else { 0 };
            for i in 0..=self.core.n {
                if matches!(self.core.state[i], Contend::Active) {
                    self.core.tally_span(i, ChannelState::Collision, s, 1);
                    continue;
                }
                if self.core.hear[i] & sense_mask != 0 {
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
                colliders[idx].header_left -= 1;
                if colliders[idx].header_left == 0 {
                    colliders[idx].stopped = true;
                    colliders[idx].stop_slot = s;
                    trace_event(&mut self.trace, s, colliders[idx].node, "header_unanswered");
                    if colliders[idx].notified_in_header {
                        self.release_collider(idx, &mut colliders, s + 2);
                    }
                }
            }

            self.core.slot = s + 1;
        }
    }

    /// Books a collider's failed attempt and schedules its fresh draw.
    fn release_collider(&mut self, idx: usize, colliders: &mut [Collider], wake: u64) {
        let c = &mut colliders[idx];
        c.released = true;
        let node = c.node;
        let start = c.start;
        let covered = c.covered_class;
        let stop = c.stop_slot;
        self.core.state[node] = Contend::Waiting(wake);
        self.core.add_non_contention(node, start, wake - start);
        if self.core.in_window(stop) {
            if covered {
                self.core.counters[node].covered_collisions += 1;
            } else {
                self.core.counters[node].hidden_collisions += 1;
            }
        }
        trace_event(
            &mut self.trace,
            stop,
            node,
            if covered { "loss_covered" } else { "loss_hidden" },
        );
    }

    /// Records the hidden-collision duration statistic: the channel time
    /// the first two colliders occupy at the AP, from the first start to
    /// the later of their two abort slots. For a plain two-party event this
    /// is the whole busy run; a start offset of d gives a length of
    /// d + header, so uniform offsets over the vulnerable window average
    /// 1.5 headers. Measuring the leading pair keeps the statistic
    /// unbiased when further terminals pile into a long episode.
    fn finish_episode(&mut self, colliders: &[Collider], first: u64, _last: u64) {
        if colliders.len() < 2 {
            return;
        }
        let (a, b) = (&colliders[0], &colliders[1]);
        let mutually_hidden = self.core.hear[a.node] >> b.node & 1 == 0 && a.node != b.node;
        if !mutually_hidden {
            return;
        }
        debug_assert!(a.stopped && b.stopped && first == a.start);
        let end = a.stop_slot.max(b.stop_slot);
        if a.start >= self.core.warmup && end < self.core.total {
            self.hidden_episodes += 1;
            self.hidden_slots += end - a.start + 1;
        }
    }

    /// Commits a clean client exchange: full duplex when the AP's
    /// head-of-line packet is for the initiator, one-way under a busy tone
    /// otherwise. Everyone hears the AP from the reply onwards, so nothing
    /// can interfere past this point.
    fn commit_exchange(&mut self, k: usize, full_duplex: bool) {
        let e0 = self.core.slot;
        let ap = self.ap();
        let h = self.t.header as u64;
        let len = if full_duplex {
            self.t.fd_exchange as u64
        } else {
            self.t.hd_exchange as u64
        };
        let end = e0 + len;
        let k_bit = 1u64 << k;

        let (near, far) = if full_duplex {
            (ChannelState::Fd, ChannelState::Hd)
        } else {
            (ChannelState::Hd, ChannelState::BtAck)
        };
        for obs in 0..=self.core.n {
            if obs == k || self.core.hear[obs] & k_bit != 0 {
                self.core.tally_span(obs, near, e0, len);
            } else {
                // Idle through the header was tallied slot by slot; the AP
                // half is audible from the reply on.
                self.core.tally_span(obs, far, e0 + h, len - h);
            }
        }

        if self.core.in_window(end - 1) {
            let c = &mut self.core.counters[k];
            c.header_successes += 1;
            c.delivered_packets += 1;
            if full_duplex {
                c.fd_success += 1;
            } else {
                c.hd_success += 1;
            }
            let c = &mut self.core.counters[ap];
            if full_duplex {
                c.fd_success += 1;
                c.fd_entries += 1;
                c.delivered_packets += 1;
            } else {
                c.hd_success += 1;
                c.bt_transmissions += 1;
            }
        }
        self.core.add_non_contention(k, e0, len);
        if full_duplex {
            self.core.add_non_contention(ap, e0 + h, len - h);
        }
        trace_event(&mut self.trace, e0, k, if full_duplex { "fd1" } else { "hd1" });

        let c = self.core.draw_backoff(k);
        self.core.state[k] = Contend::Counting(c);
        if full_duplex {
            let c = self.core.draw_backoff(ap);
            self.core.state[ap] = Contend::Counting(c);
            self.ap_hol = self.draw_hol();
        }
        self.core.process_wakes_below(end);
        self.core.slot = end;
    }
}
