//! `fdmac`: experiment harness for the full-duplex CSMA/CA analysis lab.
//!
//! Subcommands sweep the analytical engine (`model`), the slot simulator
//! (`simulate`), the full-vs-half-duplex comparison (`gain`), the
//! cross-engine agreement harness (`validate`), and topology dumps
//! (`topology`). Exit codes: 0 ok, 1 usage, 2 solver failure,
//! 3 validation failure. `FDMAC_WORKERS` caps the worker pool.

mod commands;
mod config;
mod csv;
mod grid;

use clap::{Args, Parser, Subcommand};

use commands::{SolverFailureMsg, ValidationFailed};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "fdmac", version, about = "Full-duplex CSMA/CA MAC analysis lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Configuration file (TOML); flags below override its values.
    #[arg(long)]
    config: Option<String>,
    /// fd | hd
    #[arg(long)]
    mode: Option<String>,
    /// Topology kind: ring | circulant | random
    #[arg(long)]
    topology: Option<String>,
    /// Client counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Per-client hidden counts, comma separated.
    #[arg(long = "n-h", value_delimiter = ',')]
    n_h: Option<Vec<usize>>,
    /// Contention windows, comma separated.
    #[arg(long, value_delimiter = ',')]
    cw: Option<Vec<usize>>,
    /// Placement for random topologies: uniform_area | uniform_radius
    #[arg(long)]
    placement: Option<String>,
    /// Topology seeds for random placements, comma separated.
    #[arg(long = "topology-seeds", value_delimiter = ',')]
    topology_seeds: Option<Vec<u64>>,
    /// Topology file to load instead of generating.
    #[arg(long = "topology-file")]
    topology_file: Option<String>,
    /// Slots per simulation run.
    #[arg(long)]
    slots: Option<u64>,
    /// Simulation seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Collision-time variant: pairwise_visibility | standard
    #[arg(long = "tau-c")]
    tau_c: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytical model over the configured grid.
    Model(Overrides),
    /// Run the slot simulator over the configured grid.
    Simulate(Overrides),
    /// Analytic full-duplex vs half-duplex comparison rows.
    Gain(Overrides),
    /// Run both engines and assert their agreement.
    Validate {
        #[command(flatten)]
        overrides: Overrides,
        /// Relative model-vs-simulation tolerance.
        #[arg(long, default_value_t = 0.07)]
        tolerance: f64,
    },
    /// Dump the configured topologies in the plain-text format; --out
    /// writes to a file instead of stdout.
    Topology(Overrides),
}

fn apply(overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &overrides.mode {
        cfg.mode = v.clone();
    }
    if let Some(v) = &overrides.topology {
        cfg.topology.kind = v.clone();
    }
    if let Some(v) = &overrides.n {
        cfg.topology.n = v.clone();
    }
    if let Some(v) = &overrides.n_h {
        cfg.topology.n_h = v.clone();
    }
    if let Some(v) = &overrides.cw {
        cfg.mac.cw = v.clone();
    }
    if let Some(v) = &overrides.placement {
        cfg.topology.placement = v.clone();
    }
    if let Some(v) = &overrides.topology_seeds {
        cfg.topology.seeds = v.clone();
    }
    if let Some(v) = &overrides.topology_file {
        cfg.topology.file = Some(v.clone());
    }
    if let Some(v) = overrides.slots {
        cfg.sim.slots = v;
    }
    if let Some(v) = &overrides.seeds {
        cfg.sim.seeds = v.clone();
    }
    if let Some(v) = &overrides.tau_c {
        cfg.solver.tau_c_variant = v.clone();
    }
    if let Some(v) = &overrides.out {
        cfg.output.path = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::try_parse().map_err(UsageError)?;
    match cli.command {
        Command::Model(o) => commands::cmd_model(&apply(&o).map_err(UsageError2)?),
        Command::Simulate(o) => commands::cmd_simulate(&apply(&o).map_err(UsageError2)?),
        Command::Gain(o) => commands::cmd_gain(&apply(&o).map_err(UsageError2)?),
        Command::Validate { overrides, tolerance } => {
            commands::cmd_validate(&apply(&overrides).map_err(UsageError2)?, tolerance)
        }
        Command::Topology(o) => {
            let out = o.out.clone();
            commands::cmd_topology(&apply(&o).map_err(UsageError2)?, out.as_deref())
        }
    }
}

#[derive(Debug)]
struct UsageError(clap::Error);
impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
impl std::error::Error for UsageError {}

#[derive(Debug)]
struct UsageError2(anyhow::Error);
impl std::fmt::Display for UsageError2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
impl std::error::Error for UsageError2 {}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            let code = if let Some(u) = e.downcast_ref::<UsageError>() {
                // clap handles --help/--version as "errors" with exit 0.
                use clap::error::ErrorKind;
                if matches!(u.0.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    print!("{}", u.0);
                    std::process::exit(0);
                }
                1
            } else if e.downcast_ref::<UsageError2>().is_some() {
                1
            } else if e.downcast_ref::<ValidationFailed>().is_some() {
                3
            } else if e.downcast_ref::<SolverFailureMsg>().is_some()
                || e.downcast_ref::<fdmac_core::Error>().is_some()
            {
                2
            } else {
                1
            };
            eprintln!("error: {e}");
            std::process::exit(code);
        }
    }
}
