//! Scratch probe: AO-optimized CRB vs N scaling at the estimation setup.

use irslab_core::beamforming::ao_crb_min;
use irslab_core::harness::rng::trial_rng;
use irslab_core::model::{
    los_channels, rician_channel, Architecture, CVec, ChannelSet, Geometry, PathLossModel,
    SystemConfig, C64,
};

fn cfg(arch: Architecture, n: usize) -> SystemConfig {
    SystemConfig {
        m_t: 4,
        m_r: 4,
        n_irs: n,
        t_symbols: 256,
        p_bs: 1.0,
        p_irs: 0.1,
        a_max: if arch == Architecture::Active { 100.0 } else { 1.0 },
        sigma2: 1e-12,
        sigma_z2: 1e-6,
        sigma_c2: 1e-11,
        architecture: arch,
        geometry: Geometry::broadside(2f64.sqrt(), 6.0),
        pl_bs_irs: PathLossModel::new(1e-3, 1.0, 2.2).unwrap(),
        pl_irs_target: PathLossModel::new(1e-3, 1.0, 2.0).unwrap(),
    }
}

fn main() {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12345);
    let max_iters: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300);
    let k: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    for arch in [Architecture::FullyPassive, Architecture::SemiPassive] {
        let mut pts = vec![];
        for n in [64usize, 128, 256] {
            let c = cfg(arch, n);
            let mut rng = trial_rng(seed, "slope-probe", n as u64);
            let los = los_channels(&c).unwrap();
            let l1 = c.bs_irs_gain().unwrap();
            let g_t = rician_channel(&mut rng, k, &los.g_t, l1).unwrap();
            let g_r = rician_channel(&mut rng, k, &los.g_r, l1).unwrap();
            let l2 = c.pl_irs_target.gain(c.geometry.d_irs_target).unwrap();
            let alpha = C64::from_polar(l2, 0.7);
            let ch = ChannelSet {
                g_t,
                g_r,
                h_d: CVec::zeros(0),
                h_r: CVec::zeros(0),
                theta: 0.35,
                alpha,
            };
            let t0 = std::time::Instant::now();
            let sol = ao_crb_min(&c, &ch, None, 1e-6, max_iters).unwrap();
            pts.push((n as f64, sol.objective));
            println!(
                "{arch:?} N={n}: crb={:.6e} sqrt={:.4e} rad, iters={}, conv={}, viol={:.2e}, {:?}",
                sol.objective,
                sol.objective.sqrt(),
                sol.trace.len() - 1,
                sol.converged,
                sol.worst_violation,
                t0.elapsed()
            );
        }
        // least-squares slope in log-log
        let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
        let mx = lx.iter().sum::<f64>() / lx.len() as f64;
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let slope = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
        println!("{arch:?} slope = {slope:.3}\n");
    }
}
