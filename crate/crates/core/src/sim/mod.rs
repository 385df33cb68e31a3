//! Slot-accurate discrete simulation of the full-duplex MAC and the
//! half-duplex RTS/CTS baseline.
//!
//! Time advances in whole slots and transmissions start only on slot
//! boundaries. A node counts its backoff down during slots it senses idle,
//! arms when the counter is exhausted on an idle slot, and transmits in the
//! following slot. Channel occupancy is observer-dependent: a node senses a
//! slot busy exactly when some transmitter it can hear occupies it, and a
//! successful exchange occupies its SIFS gaps as well, so an exchange is one
//! contiguous busy block of the lengths the analytical model uses.
//!
//! Every node owns an independent, seeded random stream, so reports are
//! byte-identical for a given seed no matter how the engine schedules work
//! internally. The idle-skip fast path can be disabled for cross-checking;
//! it consumes no randomness and changes nothing observable.

mod engine;
pub mod fd;
pub mod hd;

pub use fd::run_fd;
pub use hd::run_hd_rtscts;

use crate::{Error, Result};

/// Channel state as perceived by one observer in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    /// A full two-way exchange audible from its start.
    Fd = 0,
    /// A one-way exchange (or the two-way exchange of a hidden initiator,
    /// of which only the AP half is audible).
    Hd = 1,
    /// Busy-tone plus ACK tail of an exchange whose initiator is hidden.
    BtAck = 2,
    Collision = 3,
    Idle = 4,
}

impl ChannelState {
    pub const ALL: [ChannelState; 5] = [
        ChannelState::Fd,
        ChannelState::Hd,
        ChannelState::BtAck,
        ChannelState::Collision,
        ChannelState::Idle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelState::Fd => "fd",
            ChannelState::Hd => "hd",
            ChannelState::BtAck => "btack",
            ChannelState::Collision => "collision",
            ChannelState::Idle => "idle",
        }
    }
}

/// Run parameters common to both protocol flavours.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Contention window; backoff drawn uniformly from [0, W).
    pub cw: usize,
    /// Slots to simulate, including warm-up.
    pub total_slots: u64,
    pub seed: u64,
    /// Leading fraction of slots excluded from every counter, to wash out
    /// the synchronized start. Default 0.05.
    pub warmup_frac: f64,
    /// Disable the idle-run fast path and step every slot individually.
    /// Identical results, mostly useful to cross-check the fast path.
    pub exhaustive_idle: bool,
}

impl SimConfig {
    pub fn new(cw: usize, total_slots: u64, seed: u64) -> Self {
        SimConfig {
            cw,
            total_slots,
            seed,
            warmup_frac: 0.05,
            exhaustive_idle: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cw < 1 {
            return Err(Error::InvalidParameter("contention window must be >= 1".into()));
        }
        if self.total_slots == 0 {
            return Err(Error::InvalidParameter("total_slots must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(Error::InvalidParameter(
                "warmup_frac must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn warmup_slots(&self) -> u64 {
        (self.total_slots as f64 * self.warmup_frac).floor() as u64
    }
}

/// Per-node event counters. Exchanges are attributed to the slot in which
/// they complete; an exchange counts when that slot falls inside the counted
/// window, so `delivered_packets` times the payload size is exactly the
/// payload delivered by counted exchanges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub fd_success: u64,
    pub hd_success: u64,
    pub covered_collisions: u64,
    pub hidden_collisions: u64,
    pub bt_transmissions: u64,
    pub collision_notifications: u64,
    pub delivered_packets: u64,
    /// Header (or RTS) transmissions started.
    pub header_attempts: u64,
    /// Attempts that turned into a successful exchange.
    pub header_successes: u64,
    /// Full-duplex replies made from backoff (client: answering the AP;
    /// AP: answering a client).
    pub fd_entries: u64,
    /// Slots spent transmitting in an own attempt, exchange or
    /// collision dwell; the complement of time in backoff.
    pub non_contention_slots: u64,
}

/// Everything a run produces. Deterministic in the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub seed: u64,
    pub cw: usize,
    /// Slots configured for the run, including warm-up.
    pub total_slots: u64,
    pub warmup_slots: u64,
    /// Slots actually counted: total minus warm-up. All tallies and
    /// counters refer to this window.
    pub counted_slots: u64,
    /// Clients 0..n-1 followed by the AP at index n.
    pub nodes: Vec<NodeCounters>,
    /// Per-observer slot tallies indexed by [`ChannelState`]; each row sums
    /// to `counted_slots`.
    pub state_slots: Vec<[u64; 5]>,
    /// Two-party collision episodes between mutually hidden transmitters
    /// that completed inside the counted window, and their total channel
    /// occupancy at the AP. Pileups of three or more transmitters are
    /// compound events and appear only in the per-node counters.
    pub hidden_collision_episodes: u64,
    pub hidden_collision_slots: u64,
    /// Exact payload airtime per packet in slots, for normalization.
    pub payload_slots_exact: f64,
}

impl SimReport {
    pub fn n_clients(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn ap(&self) -> &NodeCounters {
        &self.nodes[self.nodes.len() - 1]
    }

    fn normalized(&self, packets: u64) -> f64 {
        packets as f64 * self.payload_slots_exact / self.counted_slots as f64
    }

    /// Mean normalized throughput per client.
    pub fn throughput_client_mean(&self) -> f64 {
        let n = self.n_clients() as f64;
        let delivered: u64 = self.nodes[..self.n_clients()]
            .iter()
            .map(|c| c.delivered_packets)
            .sum();
        self.normalized(delivered) / n
    }

    pub fn throughput_ap(&self) -> f64 {
        self.normalized(self.ap().delivered_packets)
    }

    /// Normalized system throughput: payload airtime delivered per slot,
    /// summed over all nodes.
    pub fn throughput_system(&self) -> f64 {
        let delivered: u64 = self.nodes.iter().map(|c| c.delivered_packets).sum();
        self.normalized(delivered)
    }

    pub fn per_client_throughput(&self) -> Vec<f64> {
        self.nodes[..self.n_clients()]
            .iter()
            .map(|c| self.normalized(c.delivered_packets))
            .collect()
    }

    /// Mean channel occupancy of hidden-terminal collision episodes at the
    /// AP, in slots. `None` when no such episode completed in the window.
    pub fn mean_hidden_collision_len(&self) -> Option<f64> {
        if self.hidden_collision_episodes == 0 {
            None
        } else {
            Some(self.hidden_collision_slots as f64 / self.hidden_collision_episodes as f64)
        }
    }
}

/// Per-observer channel-state fractions; each row sums to one.
pub fn channel_state_trace(report: &SimReport) -> Vec<[f64; 5]> {
    report
        .state_slots
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            debug_assert_eq!(total, report.counted_slots);
            let mut out = [0.0; 5];
            for (o, &v) in out.iter_mut().zip(row) {
                *o = v as f64 / total as f64;
            }
            out
        })
        .collect()
}

/// Events emitted through the optional trace writer.
pub(crate) fn trace_event(
    trace: &mut Option<&mut dyn std::io::Write>,
    slot: u64,
    node: usize,
    event: &str,
) {
    if let Some(w) = trace {
        let _ = writeln!(w, "{slot},{node},{event}");
    }
}
