//! Fixed-schema CSV emission. Absent fields stay empty; columns are never
//! omitted or reordered.

use std::fmt::Write as _;

pub const HEADER: &str = "mode,engine,topology,n,n_c,n_h,W,seed,slots,throughput_client,throughput_ap,throughput_system,gain,gain_estimate,alpha,beta,p,alpha_ap,beta_ap,p_ap,residual,ci_halfwidth";

#[derive(Debug, Clone, Default)]
pub struct Row {
    pub mode: String,
    pub engine: String,
    pub topology: String,
    pub n: Option<usize>,
    pub n_c: Option<f64>,
    pub n_h: Option<f64>,
    pub cw: Option<usize>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub throughput_client: Option<f64>,
    pub throughput_ap: Option<f64>,
    pub throughput_system: Option<f64>,
    pub gain: Option<f64>,
    pub gain_estimate: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub alpha_ap: Option<f64>,
    pub beta_ap: Option<f64>,
    pub p_ap: Option<f64>,
    pub residual: Option<f64>,
    pub ci_halfwidth: Option<f64>,
}

fn num<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn float(v: &Option<f64>) -> String {
    v.map(|x| {
        if x == x.trunc() && x.abs() < 1e15 {
            format!("{x}")
        } else {
            format!("{x:.6}")
        }
    })
    .unwrap_or_default()
}

impl Row {
    pub fn to_line(&self) -> String {
        debug_assert!(!self.topology.contains(','), "topology descriptor must stay comma-free");
        let mut s = String::new();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.engine,
            self.topology,
            num(&self.n),
            float(&self.n_c),
            float(&self.n_h),
            num(&self.cw),
            num(&self.seed),
            num(&self.slots),
            float(&self.throughput_client),
            float(&self.throughput_ap),
            float(&self.throughput_system),
            float(&self.gain),
            float(&self.gain_estimate),
            float(&self.alpha),
            float(&self.beta),
            float(&self.p),
            float(&self.alpha_ap),
            float(&self.beta_ap),
            float(&self.p_ap),
            float(&self.residual),
            float(&self.ci_halfwidth),
        );
        s
    }
}

pub fn write_rows(path: &str, rows: &[Row]) -> anyhow::Result<()> {
    use anyhow::Context;
    if let Some(dir) = std::path::Path::new(path).parent() {
        if !dir.as_os_str().is_empty() && !dir.exists() {
            anyhow::bail!("output directory {} does not exist", dir.display());
        }
    }
    let mut text = String::with_capacity(rows.len() * 128 + HEADER.len() + 1);
    text.push_str(HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_line());
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {path}"))?;
    Ok(())
}
