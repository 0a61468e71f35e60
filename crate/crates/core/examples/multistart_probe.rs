//! Scratch probe: does random multistart beat the deterministic inits?

use irslab_core::beamforming::{ao_crb_min, BeamformingSolution};
use irslab_core::harness::rng::trial_rng;
use irslab_core::model::{
    los_channels, rician_channel, Architecture, CMat, CVec, ChannelSet, Geometry, PathLossModel,
    ReflectPattern, SystemConfig, TransmitCovariance, C64,
};
use rand::Rng;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    for n in [64usize, 128, 256] {
        let c = SystemConfig {
            m_t: 4,
            m_r: 4,
            n_irs: n,
            t_symbols: 256,
            p_bs: 1.0,
            p_irs: 0.1,
            a_max: 1.0,
            sigma2: 1e-12,
            sigma_z2: 1e-6,
            sigma_c2: 1e-11,
            architecture: Architecture::FullyPassive,
            geometry: Geometry::broadside(2f64.sqrt(), 6.0),
            pl_bs_irs: PathLossModel::new(1e-3, 1.0, 2.2).unwrap(),
            pl_irs_target: PathLossModel::new(1e-3, 1.0, 2.0).unwrap(),
        };
        let mut rng = trial_rng(seed, "slope-probe", n as u64);
        let los = los_channels(&c).unwrap();
        let l1 = c.bs_irs_gain().unwrap();
        let g_t = rician_channel(&mut rng, 0.5, &los.g_t, l1).unwrap();
        let g_r = rician_channel(&mut rng, 0.5, &los.g_r, l1).unwrap();
        let l2 = c.pl_irs_target.gain(c.geometry.d_irs_target).unwrap();
        let ch = ChannelSet {
            g_t,
            g_r,
            h_d: CVec::zeros(0),
            h_r: CVec::zeros(0),
            theta: 0.35,
            alpha: C64::from_polar(l2, 0.7),
        };
        let det = ao_crb_min(&c, &ch, None, 1e-6, 600).unwrap();
        let mut best = det.objective;
        let mut rng2 = trial_rng(seed + 1000, "ms", n as u64);
        for _ in 0..8 {
            let phases: Vec<f64> = (0..n).map(|_| rng2.gen_range(0.0..6.28)).collect();
            let init = BeamformingSolution {
                r: TransmitCovariance::new(
                    CMat::identity(c.m_t, c.m_t) * C64::new(c.p_bs / c.m_t as f64, 0.0),
                    c.p_bs,
                )
                .unwrap(),
                pattern: ReflectPattern::passive(phases),
                objective: 0.0,
                trace: vec![],
                converged: false,
                worst_violation: 0.0,
            };
            let run = ao_crb_min(&c, &ch, Some(&init), 1e-6, 600).unwrap();
            best = best.min(run.objective);
        }
        println!(
            "N={n}: deterministic {:.4e}  best-of-9 {:.4e}  ratio {:.3}",
            det.objective,
            best,
            det.objective / best
        );
    }
}
