//! Client placements around a central access point and the covered/hidden
//! relation they induce.
//!
//! Sensing range equals transmission range for every node. Two clients are
//! hidden from each other when their distance exceeds that range; every
//! client must be within range of the AP at the origin.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

/// Placement law for random topologies.
///
/// `UniformArea` is uniform over the disk (radius proportional to the square
/// root of a uniform variate). `UniformRadius` draws the radius itself
/// uniformly, concentrating clients near the AP, which produces far fewer
/// hidden pairs for the same range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    UniformArea,
    UniformRadius,
}

impl Placement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Placement::UniformArea => "uniform_area",
            Placement::UniformRadius => "uniform_radius",
        }
    }
}

/// Maximum number of clients; hearing sets are stored as 64-bit masks.
pub const MAX_CLIENTS: usize = 63;

/// A set of client positions with the covered/hidden structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    n: usize,
    positions: Vec<(f64, f64)>,
    range_m: f64,
    /// covered[i] has bit j set when client j is within range of client i.
    covered: Vec<u64>,
    descriptor: String,
}

impl Topology {
    /// Builds the covered sets from positions alone.
    fn from_positions(
        positions: Vec<(f64, f64)>,
        range_m: f64,
        descriptor: String,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        if n > MAX_CLIENTS {
            return Err(Error::InvalidParameter(format!(
                "at most {MAX_CLIENTS} clients supported, got {n}"
            )));
        }
        if !(range_m > 0.0) {
            return Err(Error::InvalidParameter("range_m must be positive".into()));
        }
        for (i, &(x, y)) in positions.iter().enumerate() {
            let d = (x * x + y * y).sqrt();
            if d > range_m * (1.0 + 1e-12) {
                return Err(Error::InvalidTopology(format!(
                    "client {i} lies {d:.3} m from the AP, outside range {range_m} m"
                )));
            }
        }
        let mut covered = vec![0u64; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (xi, yi) = positions[i];
                let (xj, yj) = positions[j];
                let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
                if d <= range_m {
                    covered[i] |= 1 << j;
                    covered[j] |= 1 << i;
                }
            }
        }
        let t = Topology {
            n,
            positions,
            range_m,
            covered,
            descriptor,
        };
        t.check_invariants()?;
        Ok(t)
    }

    /// Builds a topology from explicit covered sets. Positions are nominal;
    /// the adjacency is authoritative.
    fn from_adjacency(
        positions: Vec<(f64, f64)>,
        range_m: f64,
        covered: Vec<u64>,
        descriptor: String,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 || n != covered.len() {
            return Err(Error::InvalidTopology(
                "positions and adjacency must agree on the client count".into(),
            ));
        }
        if n > MAX_CLIENTS {
            return Err(Error::InvalidParameter(format!(
                "at most {MAX_CLIENTS} clients supported, got {n}"
            )));
        }
        let t = Topology {
            n,
            positions,
            range_m,
            covered,
            descriptor,
        };
        t.check_invariants()?;
        Ok(t)
    }

    fn check_invariants(&self) -> Result<()> {
        let all: u64 = if self.n == 64 { !0 } else { (1u64 << self.n) - 1 };
        for i in 0..self.n {
            if self.covered[i] & (1 << i) != 0 {
                return Err(Error::InvalidTopology(format!("client {i} covers itself")));
            }
            if self.covered[i] & !all != 0 {
                return Err(Error::InvalidTopology(format!(
                    "client {i} covers out-of-range ids"
                )));
            }
            for j in 0..self.n {
                if i != j {
                    let ij = self.covered[i] >> j & 1;
                    let ji = self.covered[j] >> i & 1;
                    if ij != ji {
                        return Err(Error::InvalidTopology(format!(
                            "covered relation not symmetric between {i} and {j}"
                        )));
                    }
                }
            }
            // Partition: everyone that is not covered and not self is hidden.
            debug_assert_eq!(
                self.n_c(i) + self.n_h(i),
                self.n - 1,
                "covered/hidden do not partition the peers of {i}"
            );
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn range_m(&self) -> f64 {
        self.range_m
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Bitmask of clients covered by client `i` (excluding `i` itself).
    pub fn covered_mask(&self, i: usize) -> u64 {
        self.covered[i]
    }

    /// Bitmask of clients hidden from client `i`.
    pub fn hidden_mask(&self, i: usize) -> u64 {
        let all: u64 = if self.n == 64 { !0 } else { (1u64 << self.n) - 1 };
        all & !self.covered[i] & !(1 << i)
    }

    pub fn n_c(&self, i: usize) -> usize {
        self.covered[i].count_ones() as usize
    }

    pub fn n_h(&self, i: usize) -> usize {
        self.hidden_mask(i).count_ones() as usize
    }

    /// True when every client sees the same (n_c, n_h) split.
    pub fn is_symmetric(&self) -> bool {
        let (c0, h0) = (self.n_c(0), self.n_h(0));
        (1..self.n).all(|i| self.n_c(i) == c0 && self.n_h(i) == h0)
    }

    /// Plain-text dump: one `id,x_m,y_m,n_c,n_h` row per client followed by
    /// an adjacency section listing each client's covered set.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# fdmac topology {}", self.descriptor);
        let _ = writeln!(out, "n={} range_m={}", self.n, self.range_m);
        let _ = writeln!(out, "id,x_m,y_m,n_c,n_h");
        for i in 0..self.n {
            let (x, y) = self.positions[i];
            let _ = writeln!(out, "{i},{x:.6},{y:.6},{},{}", self.n_c(i), self.n_h(i));
        }
        let _ = writeln!(out, "adjacency");
        for i in 0..self.n {
            let ids: Vec<String> = (0..self.n)
                .filter(|&j| self.covered[i] >> j & 1 == 1)
                .map(|j| j.to_string())
                .collect();
            let _ = writeln!(out, "{i}: {}", ids.join(" "));
        }
        out
    }

    /// Parses the [`dump`](Self::dump) format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut range_m = None;
        let mut descriptor = String::from("parsed");
        let mut positions: Vec<(f64, f64)> = Vec::new();
        let mut covered: Vec<u64> = Vec::new();
        let mut in_adjacency = false;
        let bad = |msg: &str| Error::TopologyParse(msg.to_string());

        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# fdmac topology") {
                descriptor = rest.trim().to_string();
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if line.starts_with("n=") {
                for field in line.split_whitespace() {
                    if let Some(v) = field.strip_prefix("n=") {
                        n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?);
                    } else if let Some(v) = field.strip_prefix("range_m=") {
                        range_m = Some(v.parse::<f64>().map_err(|_| bad("bad range_m"))?);
                    }
                }
                continue;
            }
            if line == "id,x_m,y_m,n_c,n_h" {
                continue;
            }
            if line == "adjacency" {
                in_adjacency = true;
                covered = vec![0; positions.len()];
                continue;
            }
            if in_adjacency {
                let (id, rest) = line
                    .split_once(':')
                    .ok_or_else(|| bad("adjacency line must be `id: peers`"))?;
                let id: usize = id.trim().parse().map_err(|_| bad("bad adjacency id"))?;
                if id >= covered.len() {
                    return Err(bad("adjacency id out of range"));
                }
                for peer in rest.split_whitespace() {
                    let j: usize = peer.parse().map_err(|_| bad("bad peer id"))?;
                    if j >= covered.len() {
                        return Err(bad("peer id out of range"));
                    }
                    covered[id] |= 1 << j;
                }
            } else {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 5 {
                    return Err(bad("client row must have 5 fields"));
                }
                let x: f64 = fields[1].parse().map_err(|_| bad("bad x"))?;
                let y: f64 = fields[2].parse().map_err(|_| bad("bad y"))?;
                positions.push((x, y));
            }
        }
        let n = n.ok_or_else(|| bad("missing n="))?;
        let range_m = range_m.ok_or_else(|| bad("missing range_m="))?;
        if positions.len() != n {
            return Err(bad("client row count does not match n"));
        }
        if !in_adjacency {
            return Err(bad("missing adjacency section"));
        }
        Self::from_adjacency(positions, range_m, covered, descriptor)
    }

    /// Ring of `n` clients at equal angular spacing on radius `ring_radius`.
    pub fn ring(n: usize, ring_radius: f64, range_m: f64) -> Result<Self> {
        if !(ring_radius > 0.0) {
            return Err(Error::InvalidParameter("ring_radius must be positive".into()));
        }
        if ring_radius > range_m {
            return Err(Error::InvalidParameter(format!(
                "ring_radius {ring_radius} exceeds range {range_m}; clients would be outside AP coverage"
            )));
        }
        let positions = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (ring_radius * theta.cos(), ring_radius * theta.sin())
            })
            .collect();
        Self::from_positions(positions, range_m, format!("ring:r={ring_radius:.3}"))
    }

    /// Clients placed independently in the AP's disk under `placement`,
    /// deterministic in `seed`.
    pub fn random_disk(n: usize, range_m: f64, seed: u64, placement: Placement) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let positions = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let r = match placement {
                    Placement::UniformArea => range_m * u.sqrt(),
                    Placement::UniformRadius => range_m * u,
                };
                let theta: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                (r * theta.cos(), r * theta.sin())
            })
            .collect();
        Self::from_positions(
            positions,
            range_m,
            format!("random:seed={seed}:{}", placement.as_str()),
        )
    }

    /// Ring-like topology with an exact, symmetric hidden count: client `i`
    /// is hidden from the `n_h / 2` farthest circulant offset pairs.
    ///
    /// Even client counts put a single antipodal peer at the largest chord,
    /// so geometric rings can only realize odd hidden counts there (see
    /// [`solve_ring_radius`]); the even grids used by the validation runs
    /// come from this constructor instead. It satisfies all symmetry
    /// requirements of the analytical model, but the hidden relation is
    /// prescribed rather than induced by the nominal positions.
    pub fn circulant(n: usize, n_h: usize, range_m: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one client".into()));
        }
        if n_h % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "circulant hidden count must be even, got {n_h}"
            )));
        }
        let max_pairs = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
        if n > 1 && n_h / 2 > max_pairs {
            return Err(Error::InvalidParameter(format!(
                "n_h = {n_h} needs {} offset pairs but only {max_pairs} exist for n = {n}",
                n_h / 2
            )));
        }
        let ring_radius = range_m * 0.5;
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (ring_radius * theta.cos(), ring_radius * theta.sin())
            })
            .collect();
        // Hidden offsets: the n_h/2 pairs with the largest chords, skipping
        // the antipode when n is even.
        let mut hidden_offsets: Vec<usize> = Vec::new();
        let first = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
        for step in 0..n_h / 2 {
            let k = first - step;
            hidden_offsets.push(k);
            hidden_offsets.push(n - k);
        }
        let mut covered = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let off = (j + n - i) % n;
                if !hidden_offsets.contains(&off) {
                    covered[i] |= 1 << j;
                }
            }
        }
        Self::from_adjacency(positions, range_m, covered, format!("circulant:n_h={n_h}"))
    }
}

/// Achievable per-client hidden counts on a geometric ring, in crossing
/// order as the radius grows, with a radius interval for each.
fn ring_steps(n: usize, range_m: f64) -> Vec<(usize, f64)> {
    // Chord to offset-k peer: 2 r sin(pi k / n). Peers become hidden in
    // decreasing chord order; offsets k and n-k tie, and even n has a lone
    // antipodal peer at k = n/2.
    let mut steps = Vec::new();
    let mut count = 0usize;
    let half = n / 2;
    for k in (1..=half).rev() {
        let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
        let multiplicity = if 2 * k == n { 1 } else { 2 };
        let threshold = range_m / (2.0 * s);
        count += multiplicity;
        steps.push((count, threshold));
    }
    steps
}

/// Finds a ring radius realizing exactly `target_n_h` hidden peers per
/// client, or reports the nearest achievable counts.
///
/// The hidden count is a step function of the radius, so the search walks
/// the sorted chord thresholds directly and the result is verified with the
/// pairwise-distance check in [`Topology::ring`].
pub fn solve_ring_radius(n: usize, target_n_h: usize, range_m: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one client".into()));
    }
    if !(range_m > 0.0) {
        return Err(Error::InvalidParameter("range_m must be positive".into()));
    }
    let steps = ring_steps(n, range_m);

    // Radius interval that yields `target_n_h`: strictly above the threshold
    // that was crossed last, at most the next threshold (a chord exactly at
    // range is still covered), and at most range_m.
    let interval = |target: usize| -> Option<f64> {
        let lower = if target == 0 {
            0.0
        } else {
            match steps.iter().find(|(c, _)| *c == target) {
                Some(&(_, thr)) => thr,
                None => return None,
            }
        };
        let upper = steps
            .iter()
            .find(|(c, _)| *c > target)
            .map(|&(_, thr)| thr)
            .unwrap_or(f64::INFINITY)
            .min(range_m);
        if lower < upper {
            Some(if upper.is_finite() {
                (lower + upper) / 2.0
            } else {
                lower.max(range_m / 2.0)
            })
        } else {
            None
        }
    };

    if let Some(radius) = interval(target_n_h) {
        let check = Topology::ring(n, radius, range_m)?;
        debug_assert!(check.is_symmetric());
        if check.n_h(0) != target_n_h {
            return Err(Error::InvalidTopology(format!(
                "ring radius search produced n_h = {} instead of {target_n_h}",
                check.n_h(0)
            )));
        }
        return Ok(radius);
    }

    let achievable: Vec<usize> = std::iter::once(0)
        .chain(steps.iter().map(|&(c, _)| c))
        .filter(|&c| interval(c).is_some())
        .collect();
    Err(Error::InfeasibleRingTarget {
        n,
        target: target_n_h,
        nearest_below: achievable.iter().copied().filter(|&c| c < target_n_h).max(),
        nearest_above: achievable.iter().copied().filter(|&c| c > target_n_h).min(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_ring_has_no_hidden_peers() {
        for n in [1, 2, 5, 20] {
            let t = Topology::ring(n, 1.0, 150.0).unwrap();
            for i in 0..n {
                assert_eq!(t.n_h(i), 0);
                assert_eq!(t.n_c(i), n - 1);
            }
        }
    }

    #[test]
    fn ring_matches_bruteforce_pairwise_check() {
        // Oracle: recompute the hidden sets from raw pairwise distances on
        // independently constructed positions.
        let n = 30;
        let t = Topology::ring(n, 150.0, 150.0).unwrap();
        let positions: Vec<(f64, f64)> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (150.0 * th.cos(), 150.0 * th.sin())
            })
            .collect();
        for i in 0..n {
            let brute = (0..n)
                .filter(|&j| j != i)
                .filter(|&j| {
                    let (xi, yi) = positions[i];
                    let (xj, yj) = positions[j];
                    ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt() > 150.0
                })
                .count();
            assert_eq!(t.n_h(i), brute, "client {i}");
        }
    }

    #[test]
    fn ring_matches_chord_formula_off_ties() {
        // Away from exact chord ties the closed-form count applies:
        // hidden iff 2 r sin(pi k / n) > range.
        let n = 30;
        let r = 149.0;
        let t = Topology::ring(n, r, 150.0).unwrap();
        let expected = (1..n)
            .filter(|&k| 2.0 * r * (std::f64::consts::PI * k as f64 / n as f64).sin() > 150.0)
            .count();
        assert_eq!(expected, 19);
        for i in 0..n {
            assert_eq!(t.n_h(i), expected);
        }
    }

    #[test]
    fn rings_are_symmetric() {
        for n in [3, 8, 20, 31] {
            for r in [40.0, 80.0, 120.0, 150.0] {
                let t = Topology::ring(n, r, 150.0).unwrap();
                assert!(t.is_symmetric(), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn ring_rejects_radius_beyond_range() {
        assert!(Topology::ring(10, 151.0, 150.0).is_err());
    }

    #[test]
    fn solve_radius_zero_target() {
        let r = solve_ring_radius(20, 0, 150.0).unwrap();
        assert!(r <= 75.0 + 1e-9);
        let t = Topology::ring(20, r, 150.0).unwrap();
        assert_eq!(t.n_h(0), 0);
    }

    #[test]
    fn solve_radius_roundtrips_on_achievable_targets() {
        // Odd n has no antipodal peer, so even counts are achievable.
        for (n, target) in [(31, 2), (31, 8), (21, 4), (30, 3), (20, 7)] {
            let r = solve_ring_radius(n, target, 150.0).unwrap();
            let t = Topology::ring(n, r, 150.0).unwrap();
            assert_eq!(t.n_h(0), target, "n={n} target={target}");
        }
    }

    #[test]
    fn even_rings_cross_the_antipode_first() {
        // For n = 20 the farthest peer is unique, so n_h = 12 is not a ring
        // value; the error names the neighbouring counts.
        match solve_ring_radius(20, 12, 150.0) {
            Err(Error::InfeasibleRingTarget {
                nearest_below,
                nearest_above,
                ..
            }) => {
                assert_eq!(nearest_below, Some(11));
                assert_eq!(nearest_above, Some(13));
            }
            other => panic!("expected infeasible target, got {other:?}"),
        }
    }

    #[test]
    fn all_hidden_is_infeasible() {
        assert!(matches!(
            solve_ring_radius(20, 19, 150.0),
            Err(Error::InfeasibleRingTarget { .. })
        ));
    }

    #[test]
    fn single_client_random() {
        let t = Topology::random_disk(1, 150.0, 7, Placement::UniformArea).unwrap();
        assert_eq!(t.n_c(0), 0);
        assert_eq!(t.n_h(0), 0);
    }

    #[test]
    fn random_disk_is_deterministic() {
        let a = Topology::random_disk(20, 150.0, 42, Placement::UniformArea).unwrap();
        let b = Topology::random_disk(20, 150.0, 42, Placement::UniformArea).unwrap();
        assert_eq!(a, b);
        let c = Topology::random_disk(20, 150.0, 43, Placement::UniformArea).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_area_hidden_mean_matches_geometric_oracle() {
        // Mean hidden count per client is (n-1) * P(two uniform points in
        // the disk are farther than the radius apart). Estimate that
        // probability with an independent Monte Carlo draw.
        use rand::Rng;
        let n = 20;
        let trials = 10_000u64;
        let mut total_hidden = 0usize;
        for seed in 0..trials {
            let t = Topology::random_disk(n, 150.0, seed, Placement::UniformArea).unwrap();
            total_hidden += (0..n).map(|i| t.n_h(i)).sum::<usize>();
        }
        let mean_nh = total_hidden as f64 / (trials as f64 * n as f64);

        let mut rng = ChaCha12Rng::seed_from_u64(0xFEED);
        let pairs = 2_000_000;
        let mut far = 0u64;
        for _ in 0..pairs {
            let mut pt = || {
                let r = 150.0 * rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                (r * th.cos(), r * th.sin())
            };
            let (x1, y1) = pt();
            let (x2, y2) = pt();
            if ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt() > 150.0 {
                far += 1;
            }
        }
        let p_far = far as f64 / pairs as f64;
        let expected = (n - 1) as f64 * p_far;
        // Both estimates carry sampling noise; a generous band still pins
        // the placement law (uniform_radius would sit far below).
        assert!(
            (mean_nh - expected).abs() < 0.05 * expected,
            "mean n_h {mean_nh:.3} vs oracle {expected:.3}"
        );
    }

    #[test]
    fn uniform_radius_concentrates_clients() {
        let n = 20;
        let mut area_hidden = 0usize;
        let mut radius_hidden = 0usize;
        for seed in 0..200 {
            let a = Topology::random_disk(n, 150.0, seed, Placement::UniformArea).unwrap();
            let r = Topology::random_disk(n, 150.0, seed, Placement::UniformRadius).unwrap();
            area_hidden += (0..n).map(|i| a.n_h(i)).sum::<usize>();
            radius_hidden += (0..n).map(|i| r.n_h(i)).sum::<usize>();
        }
        // Pairwise far probabilities are about 0.22 vs 0.41.
        assert!((radius_hidden as f64) * 1.5 < area_hidden as f64);
    }

    #[test]
    fn circulant_exact_counts() {
        for (n, n_h) in [(20, 0), (20, 4), (20, 8), (20, 12), (30, 18), (8, 2)] {
            let t = Topology::circulant(n, n_h, 150.0).unwrap();
            assert!(t.is_symmetric());
            assert_eq!(t.n_h(0), n_h, "n={n}");
            assert_eq!(t.n_c(0), n - 1 - n_h);
        }
        assert!(Topology::circulant(20, 3, 150.0).is_err());
        assert!(Topology::circulant(20, 20, 150.0).is_err());
    }

    #[test]
    fn dump_parse_roundtrip() {
        let t = Topology::random_disk(12, 150.0, 5, Placement::UniformArea).unwrap();
        let parsed = Topology::parse(&t.dump()).unwrap();
        assert_eq!(parsed.n(), t.n());
        for i in 0..t.n() {
            assert_eq!(parsed.covered_mask(i), t.covered_mask(i));
        }
        let c = Topology::circulant(10, 4, 150.0).unwrap();
        let parsed = Topology::parse(&c.dump()).unwrap();
        for i in 0..c.n() {
            assert_eq!(parsed.covered_mask(i), c.covered_mask(i));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn generated_topologies_satisfy_invariants(
                n in 1usize..24,
                seed in 0u64..1000,
                area in proptest::bool::ANY,
            ) {
                let placement = if area { Placement::UniformArea } else { Placement::UniformRadius };
                let t = Topology::random_disk(n, 150.0, seed, placement).unwrap();
                for i in 0..n {
                    prop_assert_eq!(t.n_c(i) + t.n_h(i), n - 1);
                    prop_assert_eq!(t.covered_mask(i) & t.hidden_mask(i), 0);
                    prop_assert_eq!(t.covered_mask(i) & (1 << i), 0);
                    for j in 0..n {
                        if i != j {
                            prop_assert_eq!(
                                t.covered_mask(i) >> j & 1,
                                t.covered_mask(j) >> i & 1
                            );
                        }
                    }
                }
            }

            #[test]
            fn half_range_rings_are_fully_covered(n in 2usize..40, frac in 0.05f64..0.5) {
                let t = Topology::ring(n, 150.0 * frac, 150.0).unwrap();
                prop_assert_eq!(t.n_h(0), 0);
            }
        }
    }
}
