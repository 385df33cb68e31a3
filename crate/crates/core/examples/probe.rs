use fdmac_core::fd_model::{self, SolverOpts};
use fdmac_core::hd_model;
use fdmac_core::timing::{derive_hd_timing, derive_timing, PhyParams, CTS_BYTES_DEFAULT, RTS_BYTES_DEFAULT};
use fdmac_core::topology::{Placement, Topology};

fn main() {
    let t = derive_timing(&PhyParams::default()).unwrap();
    let th = derive_hd_timing(&PhyParams::default(), RTS_BYTES_DEFAULT, CTS_BYTES_DEFAULT).unwrap();
    let opts = SolverOpts::default();
    let ws = [128usize, 256, 512, 1024, 2048];
    for placement in [Placement::UniformRadius, Placement::UniformArea] {
        for n in [8usize, 12] {
            let mut fd_curve = Vec::new();
            let mut gain_curve = Vec::new();
            for &w in &ws {
                let (mut fd_sum, mut hd_sum) = (0.0, 0.0);
                for seed in 0..8u64 {
                    let topo = Topology::random_disk(n, 150.0, seed, placement).unwrap();
                    fd_sum += fd_model::random_topology_estimate(&topo, w, &t, &opts).unwrap().system_throughput;
                    hd_sum += hd_model::random_topology_estimate(&topo, w, &th, &opts).unwrap().system_throughput;
                }
                fd_curve.push(fd_sum / 8.0);
                gain_curve.push(fd_sum / hd_sum);
            }
            let wstar = fd_curve
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            println!(
                "{:?} n={n}: fd {fd_curve:.4?} gain {gain_curve:.3?} => W*={} gain(W*)={:.3}",
                placement, ws[wstar], gain_curve[wstar]
            );
        }
    }
}
