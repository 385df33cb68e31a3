//! Conversion of physical-layer parameters into integer slot durations.
//!
//! Every quantity downstream of this module is measured in whole slots. A
//! transmission occupies whole slots: fractional durations round up, which is
//! the conservative choice for channel occupancy and keeps the slotted
//! analysis and the slotted simulator exactly comparable.

use crate::{Error, Result};

/// Physical-layer parameters. Frame sizes in bytes, times in microseconds,
/// rates in bits per second. The PHY preamble is always sent at the preamble
/// rate; everything after it at the data rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyParams {
    pub mac_header_bytes: u32,
    pub phy_header_bytes: u32,
    pub ack_bytes: u32,
    pub payload_bytes: u32,
    pub slot_us: f64,
    pub sifs_us: f64,
    pub preamble_rate_bps: f64,
    pub data_rate_bps: f64,
}

impl Default for PhyParams {
    /// 802.11-flavoured defaults: 28-byte MAC header, 24-byte PHY header,
    /// 38-byte ACK, 1000-byte payload, 20 us slots, 10 us SIFS, 1 Mbps
    /// preamble rate and 10 Mbps data rate.
    fn default() -> Self {
        PhyParams {
            mac_header_bytes: 28,
            phy_header_bytes: 24,
            ack_bytes: 38,
            payload_bytes: 1000,
            slot_us: 20.0,
            sifs_us: 10.0,
            preamble_rate_bps: 1e6,
            data_rate_bps: 10e6,
        }
    }
}

impl PhyParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("slot_us", self.slot_us),
            ("sifs_us", self.sifs_us),
            ("preamble_rate_bps", self.preamble_rate_bps),
            ("data_rate_bps", self.data_rate_bps),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        let counts = [
            ("mac_header_bytes", self.mac_header_bytes),
            ("phy_header_bytes", self.phy_header_bytes),
            ("ack_bytes", self.ack_bytes),
            ("payload_bytes", self.payload_bytes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be nonzero")));
            }
        }
        if self.ack_bytes <= self.phy_header_bytes {
            return Err(Error::InvalidParameter(format!(
                "ack_bytes ({}) must exceed phy_header_bytes ({})",
                self.ack_bytes, self.phy_header_bytes
            )));
        }
        Ok(())
    }

    /// Time to send the PHY preamble plus `bytes` at the data rate, in us.
    fn frame_us(&self, bytes: u32) -> f64 {
        self.phy_header_bytes as f64 * 8.0 / self.preamble_rate_bps * 1e6
            + bytes as f64 * 8.0 / self.data_rate_bps * 1e6
    }

    /// Payload airtime expressed in (possibly fractional) slots. Used to
    /// normalize throughput over the data rate without the quantization
    /// error of the rounded-up slot count.
    pub fn payload_slots_exact(&self) -> f64 {
        self.payload_bytes as f64 * 8.0 / self.data_rate_bps * 1e6 / self.slot_us
    }
}

/// All protocol durations in integer slots.
///
/// `fd_exchange` covers a full-duplex exchange: the initiator's header, the
/// responder's header offset by one header time, the shared payload time,
/// SIFS, and the simultaneous ACKs. `hd_exchange` is the same with a busy
/// tone instead of a second header. `vulnerable` is the header-long window
/// during which a hidden terminal can still collide with an ongoing
/// transmission, and `bt_ack` the busy-tone-plus-ACK tail heard by a node
/// hidden from the transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct MacTiming {
    /// Header airtime (PHY preamble + MAC header), slots.
    pub header: u32,
    /// Payload airtime, slots.
    pub payload: u32,
    pub sifs: u32,
    pub ack: u32,
    /// One backoff slot. Fixed at 1 by construction.
    pub sigma: u32,
    /// Successful full-duplex exchange: 2*header + payload + sifs + ack.
    pub fd_exchange: u32,
    /// Successful one-way exchange under a busy tone: header + payload + sifs + ack.
    pub hd_exchange: u32,
    /// Vulnerable period, equal to the header time.
    pub vulnerable: u32,
    /// Busy-tone + ACK tail: hd_exchange - vulnerable.
    pub bt_ack: u32,
    /// Payload airtime in exact (fractional) slots, for normalization.
    pub payload_slots_exact: f64,
}

/// Quantizes physical-layer parameters into [`MacTiming`].
///
/// The ACK is decomposed as the PHY preamble at the preamble rate plus the
/// remaining bytes at the data rate.
pub fn derive_timing(phy: &PhyParams) -> Result<MacTiming> {
    phy.validate()?;
    let slots = |us: f64| -> u32 { (us / phy.slot_us).ceil() as u32 };

    let header = slots(phy.frame_us(phy.mac_header_bytes));
    let payload = slots(phy.payload_bytes as f64 * 8.0 / phy.data_rate_bps * 1e6);
    let ack = slots(phy.frame_us(phy.ack_bytes - phy.phy_header_bytes));
    let sifs = slots(phy.sifs_us);
    let sigma = 1;

    let fd_exchange = 2 * header + payload + sifs + ack;
    let hd_exchange = header + payload + sifs + ack;
    let vulnerable = header;
    let bt_ack = hd_exchange - vulnerable;

    let t = MacTiming {
        header,
        payload,
        sifs,
        ack,
        sigma,
        fd_exchange,
        hd_exchange,
        vulnerable,
        bt_ack,
        payload_slots_exact: phy.payload_slots_exact(),
    };
    debug_assert!(t.header >= 1 && t.payload >= 1 && t.ack >= 1 && t.sifs >= 1);
    debug_assert_eq!(t.fd_exchange, t.hd_exchange + t.header);
    debug_assert!(t.bt_ack < t.hd_exchange);
    Ok(t)
}

/// [`MacTiming`] extended with RTS/CTS durations for the half-duplex
/// baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct HdTiming {
    pub mac: MacTiming,
    /// RTS airtime (PHY preamble + RTS frame), slots.
    pub rts: u32,
    /// CTS airtime, slots.
    pub cts: u32,
}

impl HdTiming {
    /// Full RTS/CTS/DATA/ACK exchange length in slots:
    /// rts + sifs + cts + sifs + (header + payload) + sifs + ack.
    pub fn exchange(&self) -> u32 {
        self.rts
            + self.mac.sifs
            + self.cts
            + self.mac.sifs
            + self.mac.header
            + self.mac.payload
            + self.mac.sifs
            + self.mac.ack
    }
}

/// Legacy 802.11 control-frame sizes: 20-byte RTS, 14-byte CTS.
pub const RTS_BYTES_DEFAULT: u32 = 20;
pub const CTS_BYTES_DEFAULT: u32 = 14;

/// Quantizes RTS/CTS control frames on top of [`derive_timing`].
pub fn derive_hd_timing(phy: &PhyParams, rts_bytes: u32, cts_bytes: u32) -> Result<HdTiming> {
    let mac = derive_timing(phy)?;
    if rts_bytes == 0 || cts_bytes == 0 {
        return Err(Error::InvalidParameter(
            "rts_bytes and cts_bytes must be nonzero".into(),
        ));
    }
    let slots = |us: f64| -> u32 { (us / phy.slot_us).ceil() as u32 };
    let rts = slots(phy.frame_us(rts_bytes)).max(1);
    let cts = slots(phy.frame_us(cts_bytes)).max(1);
    Ok(HdTiming { mac, rts, cts })
}
