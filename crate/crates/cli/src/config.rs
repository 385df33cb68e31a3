//! Run configuration: a TOML file with flat key-value sections, every field
//! overridable from the command line. Defaults reproduce the reference
//! parameter set (28/24/38/1000-byte frames, 20 us slots, 10 Mbps data
//! rate, 1 Mbps preamble rate, 150 m range).

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use fdmac_core::fd_model::{SolverOpts, TauCVariant};
use fdmac_core::timing::{PhyParams, CTS_BYTES_DEFAULT, RTS_BYTES_DEFAULT};
use fdmac_core::topology::Placement;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// fd | hd
    pub mode: String,
    /// model | sim | both
    pub engine: String,
    pub topology: TopologyConfig,
    pub mac: MacConfig,
    pub sim: SimConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    /// ring | circulant | random
    pub kind: String,
    pub n: Vec<usize>,
    /// Per-client hidden counts (ring and circulant kinds).
    pub n_h: Vec<usize>,
    pub range_m: f64,
    /// Explicit ring radius; when absent the radius is solved from n_h.
    pub ring_radius: Option<f64>,
    /// uniform_area | uniform_radius
    pub placement: String,
    /// Seeds for random placements.
    pub seeds: Vec<u64>,
    /// Optional topology file consumed instead of a generator.
    pub file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConfig {
    pub cw: Vec<usize>,
    pub mac_header_bytes: u32,
    pub phy_header_bytes: u32,
    pub ack_bytes: u32,
    pub payload_bytes: u32,
    pub slot_us: f64,
    pub sifs_us: f64,
    pub preamble_rate_bps: f64,
    pub data_rate_bps: f64,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub slots: u64,
    pub seeds: Vec<u64>,
    /// Stop a point early once the 95% CI half-width over seeds falls
    /// below this relative target.
    pub ci_rel_target: f64,
    pub warmup_frac: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub fallback_damping: f64,
    /// pairwise_visibility | standard
    pub tau_c_variant: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: "fd".into(),
            engine: "model".into(),
            topology: TopologyConfig::default(),
            mac: MacConfig::default(),
            sim: SimConfig::default(),
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            kind: "circulant".into(),
            n: vec![20],
            n_h: vec![0],
            range_m: 150.0,
            ring_radius: None,
            placement: "uniform_area".into(),
            seeds: vec![1],
            file: None,
        }
    }
}

impl Default for MacConfig {
    fn default() -> Self {
        let phy = PhyParams::default();
        MacConfig {
            cw: vec![512],
            mac_header_bytes: phy.mac_header_bytes,
            phy_header_bytes: phy.phy_header_bytes,
            ack_bytes: phy.ack_bytes,
            payload_bytes: phy.payload_bytes,
            slot_us: phy.slot_us,
            sifs_us: phy.sifs_us,
            preamble_rate_bps: phy.preamble_rate_bps,
            data_rate_bps: phy.data_rate_bps,
            rts_bytes: RTS_BYTES_DEFAULT,
            cts_bytes: CTS_BYTES_DEFAULT,
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            slots: 10_000_000,
            seeds: vec![1, 2, 3, 4, 5],
            ci_rel_target: 0.02,
            warmup_frac: 0.05,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let opts = SolverOpts::default();
        SolverConfig {
            tol: opts.tol,
            max_iters: opts.max_iters,
            damping: opts.damping,
            fallback_damping: opts.fallback_damping,
            tau_c_variant: "pairwise_visibility".into(),
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: "results.csv".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {path}"))?;
        let cfg: RunConfig = toml::from_str(&text).context("malformed config file")?;
        Ok(cfg)
    }

    pub fn phy(&self) -> PhyParams {
        PhyParams {
            mac_header_bytes: self.mac.mac_header_bytes,
            phy_header_bytes: self.mac.phy_header_bytes,
            ack_bytes: self.mac.ack_bytes,
            payload_bytes: self.mac.payload_bytes,
            slot_us: self.mac.slot_us,
            sifs_us: self.mac.sifs_us,
            preamble_rate_bps: self.mac.preamble_rate_bps,
            data_rate_bps: self.mac.data_rate_bps,
        }
    }

    pub fn solver_opts(&self) -> Result<SolverOpts> {
        let tau_c_variant = match self.solver.tau_c_variant.as_str() {
            "pairwise_visibility" => TauCVariant::PairwiseVisibility,
            "standard" => TauCVariant::Standard,
            other => bail!("unknown tau_c_variant {other:?} (expected pairwise_visibility or standard)"),
        };
        Ok(SolverOpts {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            damping: self.solver.damping,
            fallback_damping: self.solver.fallback_damping,
            tau_c_variant,
        })
    }

    pub fn placement(&self) -> Result<Placement> {
        match self.topology.placement.as_str() {
            "uniform_area" => Ok(Placement::UniformArea),
            "uniform_radius" => Ok(Placement::UniformRadius),
            other => bail!("unknown placement {other:?} (expected uniform_area or uniform_radius)"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.mode.as_str(), "fd" | "hd") {
            bail!("mode must be fd or hd, got {:?}", self.mode);
        }
        if !matches!(self.engine.as_str(), "model" | "sim" | "both") {
            bail!("engine must be model, sim or both, got {:?}", self.engine);
        }
        if !matches!(self.topology.kind.as_str(), "ring" | "circulant" | "random") {
            bail!("topology.kind must be ring, circulant or random");
        }
        if self.topology.n.is_empty() || self.mac.cw.is_empty() {
            bail!("empty grid: topology.n and mac.cw must be non-empty");
        }
        if self.topology.kind != "random" && self.topology.n_h.is_empty() {
            bail!("empty grid: topology.n_h must be non-empty for ring and circulant kinds");
        }
        if self.topology.kind == "random" && self.topology.seeds.is_empty() {
            bail!("empty grid: topology.seeds must be non-empty for random topologies");
        }
        if self.engine != "model" && self.sim.seeds.is_empty() {
            bail!("simulation requires at least one seed");
        }
        self.solver_opts()?;
        self.placement()?;
        Ok(())
    }

    /// Writes the resolved configuration next to the output so a run can be
    /// reproduced bit for bit.
    pub fn write_echo(&self, out_path: &str) -> Result<()> {
        let echo_path = format!("{out_path}.config.toml");
        let mut text = format!(
            "# fdmac {} run echo; rerun with: fdmac <command> --config this-file\n",
            env!("CARGO_PKG_VERSION")
        );
        text.push_str(&toml::to_string_pretty(self)?);
        std::fs::write(&echo_path, text)
            .with_context(|| format!("cannot write config echo {echo_path}"))?;
        Ok(())
    }
}
