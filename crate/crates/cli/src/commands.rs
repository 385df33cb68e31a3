//! Subcommand implementations. Grid points run on a worker pool; rows are
//! collected and written in grid order through one writer.

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use fdmac_core::fd_model::{self, FdScenario, SolverOpts};
use fdmac_core::hd_model::{self, HdScenario};
use fdmac_core::sim::{self, SimReport};
use fdmac_core::timing::{derive_hd_timing, derive_timing, HdTiming, MacTiming};
use fdmac_core::topology::Topology;

use crate::config::RunConfig;
use crate::csv::{write_rows, Row};
use crate::grid::{expand, GridPoint};

fn timings(config: &RunConfig) -> Result<(MacTiming, HdTiming)> {
    let phy = config.phy();
    let mac = derive_timing(&phy)?;
    let hd = derive_hd_timing(&phy, config.mac.rts_bytes, config.mac.cts_bytes)?;
    Ok((mac, hd))
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FDMAC_WORKERS") {
        let workers: usize = v
            .parse()
            .context("FDMAC_WORKERS must be a positive integer")?;
        builder = builder.num_threads(workers.max(1));
    }
    Ok(builder.build()?)
}

fn base_row(config: &RunConfig, point: &GridPoint) -> Row {
    Row {
        mode: config.mode.clone(),
        engine: String::new(),
        topology: point.descriptor(),
        n: Some(point.n),
        n_c: Some(point.n_c_mean),
        n_h: Some(point.n_h_mean),
        cw: Some(point.cw),
        ..Row::default()
    }
}

/// Analytic solve of one grid point under the configured mode. Asymmetric
/// topologies go through the per-node averaging estimate.
fn model_row(
    config: &RunConfig,
    point: &GridPoint,
    mac: &MacTiming,
    hd: &HdTiming,
    opts: &SolverOpts,
) -> Result<Row> {
    let mut row = base_row(config, point);
    row.engine = "model".into();
    match (config.mode.as_str(), point.symmetric) {
        ("fd", true) => {
            let sc = FdScenario::symmetric(point.n, point.n_h_mean as usize, point.cw, mac.clone())?;
            let sol = fd_model::solve_fixed_point(&sc, opts)?;
            row.throughput_client = Some(sol.throughput_client);
            row.throughput_ap = Some(sol.throughput_ap);
            row.throughput_system = Some(sol.throughput_system);
            row.gain_estimate = sol.gain_estimate().ok();
            row.alpha = Some(sol.alpha);
            row.beta = Some(sol.beta);
            row.p = Some(sol.p);
            row.alpha_ap = Some(sol.alpha_ap);
            row.beta_ap = Some(sol.beta_ap);
            row.p_ap = Some(sol.p_ap);
            row.residual = Some(sol.residual);
        }
        ("fd", false) => {
            let est = fd_model::random_topology_estimate(&point.topology, point.cw, mac, opts)?;
            for (i, r) in est.per_node.iter().enumerate() {
                if let Err(e) = r {
                    eprintln!("note: node {i} solve failed in {}: {e}", row.topology);
                }
            }
            row.throughput_system = Some(est.system_throughput);
        }
        ("hd", true) => {
            let sc = HdScenario::symmetric(point.n, point.n_h_mean as usize, point.cw, hd.clone())?;
            let sol = hd_model::solve_hd(&sc, opts)?;
            row.throughput_client = Some(sol.throughput_client);
            row.throughput_ap = Some(sol.throughput_ap);
            row.throughput_system = Some(sol.throughput_system);
            row.alpha = Some(sol.alpha);
            row.beta = Some(0.0);
            row.p = Some(sol.p);
            row.alpha_ap = Some(sol.alpha_ap);
            row.beta_ap = Some(0.0);
            row.p_ap = Some(sol.p_ap);
            row.residual = Some(sol.residual);
        }
        ("hd", false) => {
            let est = hd_model::random_topology_estimate(&point.topology, point.cw, hd, opts)?;
            for (i, r) in est.per_node.iter().enumerate() {
                if let Err(e) = r {
                    eprintln!("note: node {i} solve failed in {}: {e}", row.topology);
                }
            }
            row.throughput_system = Some(est.system_throughput);
        }
        _ => bail!("unknown mode {}", config.mode),
    }
    Ok(row)
}

fn run_sim_once(
    config: &RunConfig,
    topology: &Topology,
    cw: usize,
    seed: u64,
    mac: &MacTiming,
    hd: &HdTiming,
) -> Result<SimReport> {
    let mut sc = sim::SimConfig::new(cw, config.sim.slots, seed);
    sc.warmup_frac = config.sim.warmup_frac;
    let report = match config.mode.as_str() {
        "fd" => sim::run_fd(topology, mac, &sc)?,
        "hd" => sim::run_hd_rtscts(topology, hd, &sc)?,
        other => bail!("unknown mode {other}"),
    };
    Ok(report)
}

fn sim_rows(
    config: &RunConfig,
    point: &GridPoint,
    mac: &MacTiming,
    hd: &HdTiming,
) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut stop_reason = "slot budget exhausted";
    for &seed in &config.sim.seeds {
        let report = run_sim_once(config, &point.topology, point.cw, seed, mac, hd)?;
        let mut row = base_row(config, point);
        row.engine = "sim".into();
        row.seed = Some(seed);
        row.slots = Some(report.total_slots);
        row.throughput_client = Some(report.throughput_client_mean());
        row.throughput_ap = Some(report.throughput_ap());
        row.throughput_system = Some(report.throughput_system());
        values.push(report.throughput_system());
        rows.push(row);
        if values.len() >= 2 {
            let (mean, half) = mean_ci(&values);
            if half / mean <= config.sim.ci_rel_target {
                stop_reason = "confidence target met";
                break;
            }
        }
    }
    let (mean, half) = mean_ci(&values);
    eprintln!(
        "point {} n={} W={}: {} after {} seed(s), mean {:.4}, 95% CI half-width {:.2}%",
        point.descriptor(),
        point.n,
        point.cw,
        stop_reason,
        values.len(),
        mean,
        half / mean * 100.0
    );
    let mut agg = base_row(config, point);
    agg.engine = "sim".into();
    agg.slots = Some(config.sim.slots);
    agg.throughput_system = Some(mean);
    agg.ci_halfwidth = Some(half);
    rows.push(agg);
    Ok(rows)
}

/// Mean and 95% confidence half-width over per-seed values.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

pub fn cmd_model(config: &RunConfig) -> Result<()> {
    let (mac, hd) = timings(config)?;
    let opts = config.solver_opts()?;
    let points = expand(config)?;
    let rows: Vec<Result<Row>> = pool()?.install(|| {
        points
            .par_iter()
            .map(|p| model_row(config, p, &mac, &hd, &opts))
            .collect()
    });
    let rows: Result<Vec<Row>> = rows.into_iter().collect();
    let rows = rows.map_err(|e| anyhow!(SolverFailureMsg(e.to_string())))?;
    write_rows(&config.output.path, &rows)?;
    config.write_echo(&config.output.path)?;
    println!("wrote {} model rows to {}", rows.len(), config.output.path);
    Ok(())
}

pub fn cmd_simulate(config: &RunConfig) -> Result<()> {
    let (mac, hd) = timings(config)?;
    let points = expand(config)?;
    let rows: Vec<Result<Vec<Row>>> = pool()?.install(|| {
        points
            .par_iter()
            .map(|p| sim_rows(config, p, &mac, &hd))
            .collect()
    });
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    write_rows(&config.output.path, &all)?;
    config.write_echo(&config.output.path)?;
    println!("wrote {} sim rows to {}", all.len(), config.output.path);
    Ok(())
}

/// Analytic full-duplex and half-duplex solves per grid point: an fd row
/// carrying the exact gain and its closed-form estimate, then the hd row.
pub fn cmd_gain(config: &RunConfig) -> Result<()> {
    let (mac, hd) = timings(config)?;
    let opts = config.solver_opts()?;
    let points = expand(config)?;
    let rows: Vec<Result<Vec<Row>>> = pool()?.install(|| {
        points
            .par_iter()
            .map(|p| -> Result<Vec<Row>> {
                let mut fd_cfg = config.clone();
                fd_cfg.mode = "fd".into();
                let mut hd_cfg = config.clone();
                hd_cfg.mode = "hd".into();
                let mut fd_row = model_row(&fd_cfg, p, &mac, &hd, &opts)?;
                let hd_row = model_row(&hd_cfg, p, &mac, &hd, &opts)?;
                let fd_sys = fd_row.throughput_system.unwrap_or(f64::NAN);
                let hd_sys = hd_row.throughput_system.unwrap_or(f64::NAN);
                if hd_sys > 0.0 {
                    fd_row.gain = Some(fd_sys / hd_sys);
                }
                if !p.symmetric {
                    // The averaged estimate has no single chain; recompute
                    // the pairing estimate from the mean counts.
                    if let Ok(sc) = FdScenario::symmetric(
                        p.n,
                        p.n_h_mean.round() as usize,
                        p.cw,
                        mac.clone(),
                    ) {
                        if let Ok(sol) = fd_model::solve_fixed_point(&sc, &opts) {
                            fd_row.gain_estimate = sol.gain_estimate().ok();
                        }
                    }
                }
                Ok(vec![fd_row, hd_row])
            })
            .collect()
    });
    let mut all = Vec::new();
    for r in rows {
        all.extend(r.map_err(|e| anyhow!(SolverFailureMsg(e.to_string())))?);
    }
    write_rows(&config.output.path, &all)?;
    config.write_echo(&config.output.path)?;
    println!("wrote {} gain rows to {}", all.len(), config.output.path);
    Ok(())
}

/// Runs both engines over the configured grid and checks the agreement
/// contract: analytic system throughput within `tolerance` of the
/// simulated mean. Returns Err(ValidationFailed) when any point drifts.
pub fn cmd_validate(config: &RunConfig, tolerance: f64) -> Result<()> {
    let (mac, hd) = timings(config)?;
    let opts = config.solver_opts()?;
    let points = expand(config)?;
    let results: Vec<Result<(Row, Vec<Row>)>> = pool()?.install(|| {
        points
            .par_iter()
            .map(|p| -> Result<(Row, Vec<Row>)> {
                let m = model_row(config, p, &mac, &hd, &opts)?;
                let s = sim_rows(config, p, &mac, &hd)?;
                Ok((m, s))
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = 0usize;
    println!("{:<28} {:>5} {:>6} {:>10} {:>10} {:>8} {:>8}", "topology", "n", "W", "model", "sim", "drift", "status");
    for r in results {
        let (model, sims) = r.map_err(|e| anyhow!(SolverFailureMsg(e.to_string())))?;
        let agg = sims.last().expect("sim_rows always appends an aggregate");
        let m = model.throughput_system.unwrap_or(f64::NAN);
        let s = agg.throughput_system.unwrap_or(f64::NAN);
        let drift = (m - s) / s;
        let ok = drift.abs() <= tolerance;
        if !ok {
            failures += 1;
        }
        println!(
            "{:<28} {:>5} {:>6} {:>10.4} {:>10.4} {:>+7.2}% {:>8}",
            model.topology,
            model.n.unwrap_or(0),
            model.cw.unwrap_or(0),
            m,
            s,
            drift * 100.0,
            if ok { "ok" } else { "DRIFT" }
        );
        rows.push(model);
        rows.extend(sims);
    }
    write_rows(&config.output.path, &rows)?;
    config.write_echo(&config.output.path)?;
    if failures > 0 {
        bail!(ValidationFailed(failures));
    }
    println!("validation passed: every point within {:.1}%", tolerance * 100.0);
    Ok(())
}

pub fn cmd_topology(config: &RunConfig, out: Option<&str>) -> Result<()> {
    let points = expand(config)?;
    let mut text = String::new();
    let mut seen = std::collections::HashSet::new();
    for p in &points {
        if seen.insert(p.topology.descriptor().to_string()) {
            text.push_str(&p.topology.dump());
        }
    }
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {path}"))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Debug)]
pub struct ValidationFailed(pub usize);
impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "validation failed at {} grid point(s)", self.0)
    }
}
impl std::error::Error for ValidationFailed {}

#[derive(Debug)]
pub struct SolverFailureMsg(pub String);
impl std::fmt::Display for SolverFailureMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver failure: {}", self.0)
    }
}
impl std::error::Error for SolverFailureMsg {}
