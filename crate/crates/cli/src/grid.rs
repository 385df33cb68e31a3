//! Grid expansion: the configured sweep becomes an ordered list of points,
//! each carrying the topology to run and its symmetric counts when they
//! exist. Output order always follows grid order.

use anyhow::{bail, Context, Result};

use fdmac_core::topology::{solve_ring_radius, Topology};

use crate::config::RunConfig;

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub topology: Topology,
    pub n: usize,
    pub cw: usize,
    /// Exact hidden count for symmetric topologies; mean over clients
    /// otherwise.
    pub n_h_mean: f64,
    pub n_c_mean: f64,
    /// True when every client shares the same (n_c, n_h).
    pub symmetric: bool,
}

impl GridPoint {
    pub fn descriptor(&self) -> String {
        self.topology.descriptor().replace(',', ";").to_string()
    }
}

/// Expands the configured grid in order: n (outer), then n_h or topology
/// seed, then the contention window.
pub fn expand(config: &RunConfig) -> Result<Vec<GridPoint>> {
    config.validate().map_err(|e| e.context("invalid configuration"))?;
    let mut points = Vec::new();
    let topo = &config.topology;

    let mut topologies: Vec<Topology> = Vec::new();
    if let Some(file) = &topo.file {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("cannot read topology file {file}"))?;
        topologies.push(Topology::parse(&text)?);
    } else {
        for &n in &topo.n {
            match topo.kind.as_str() {
                "ring" => {
                    for &n_h in &topo.n_h {
                        let radius = match topo.ring_radius {
                            Some(r) => r,
                            None => solve_ring_radius(n, n_h, topo.range_m)?,
                        };
                        topologies.push(Topology::ring(n, radius, topo.range_m)?);
                    }
                }
                "circulant" => {
                    for &n_h in &topo.n_h {
                        topologies.push(Topology::circulant(n, n_h, topo.range_m)?);
                    }
                }
                "random" => {
                    for &seed in &topo.seeds {
                        topologies.push(Topology::random_disk(
                            n,
                            topo.range_m,
                            seed,
                            config.placement()?,
                        )?);
                    }
                }
                other => bail!("unknown topology kind {other}"),
            }
        }
    }

    for t in topologies {
        let n = t.n();
        let n_h_mean = (0..n).map(|i| t.n_h(i)).sum::<usize>() as f64 / n as f64;
        let n_c_mean = (n - 1) as f64 - n_h_mean;
        let symmetric = t.is_symmetric();
        for &cw in &config.mac.cw {
            points.push(GridPoint {
                topology: t.clone(),
                n,
                cw,
                n_h_mean,
                n_c_mean,
                symmetric,
            });
        }
    }
    if points.is_empty() {
        bail!("the configured grid is empty");
    }
    Ok(points)
}
