//! Preset parameter sets for the published evaluation scenarios.

use super::config::{ChannelKind, ExperimentConfig, IsacTemplate, Preset, ScenarioTemplate};
use crate::model::Architecture;

const ALL: [Architecture; 3] =
    [Architecture::FullyPassive, Architecture::SemiPassive, Architecture::Active];

/// Defaults a preset supplies for every omitted key.
pub fn defaults(preset: Preset) -> ExperimentConfig {
    match preset {
        Preset::DetectSweep | Preset::McValidate | Preset::Custom => ExperimentConfig {
            preset,
            seed: 0,
            trials: if preset == Preset::McValidate { 100_000 } else { 0 },
            system: ScenarioTemplate {
                architectures: ALL.to_vec(),
                m_t: 8,
                m_r: 8,
                t_symbols: 128,
                p_bs: 1.0,   // 30 dBm at the BS for the active case
                p_irs: 0.1,  // 20 dBm surface budget
                a_max: 100.0,
                sigma2: 1e-11,  // -80 dBm
                sigma_z2: 1e-6, // -30 dBm
                sigma_c2: 1e-11,
                fair_total_power: true,
                d1: 5.0,
                d2: 65.0,
                bs_angle: 0.0,
                irs_angle: 0.0,
                target_angle: 0.35,
                k0: 1e-3, // -30 dB at 1 m
                alpha_bs_irs: 2.2,
                alpha_irs_target: 2.2,
                pfa: 1e-2,
                channel: ChannelKind::Los,
                crb_draws: 4,
                isac: None,
            },
            sweep_name: "n_irs".into(),
            sweep_values: if preset == Preset::McValidate {
                vec![16.0, 36.0, 64.0]
            } else {
                vec![8.0, 16.0, 36.0, 64.0, 128.0, 192.0, 256.0]
            },
            output_path: format!("{}.csv", preset.label()),
        },
        Preset::CrbSweep => ExperimentConfig {
            preset,
            seed: 0,
            trials: 0,
            system: ScenarioTemplate {
                architectures: vec![Architecture::FullyPassive, Architecture::SemiPassive],
                m_t: 4,
                m_r: 4,
                t_symbols: 256,
                p_bs: 1.0, // 30 dBm
                p_irs: 0.1,
                a_max: 100.0,
                sigma2: 1e-12, // -90 dBm
                sigma_z2: 1e-6,
                sigma_c2: 1e-11,
                fair_total_power: true,
                d1: std::f64::consts::SQRT_2,
                d2: 6.0,
                bs_angle: 0.0,
                irs_angle: 0.0,
                target_angle: 0.35,
                k0: 1e-3,
                alpha_bs_irs: 2.2,
                alpha_irs_target: 2.0,
                pfa: 1e-2,
                channel: ChannelKind::Rician { k: 0.5 },
                crb_draws: 4,
                isac: None,
            },
            sweep_name: "n_irs".into(),
            sweep_values: vec![16.0, 32.0, 64.0, 128.0, 256.0],
            output_path: "crb-sweep.csv".into(),
        },
        Preset::IsacRegion => ExperimentConfig {
            preset,
            seed: 0,
            trials: 0,
            system: ScenarioTemplate {
                architectures: vec![Architecture::FullyPassive],
                m_t: 8,
                m_r: 8,
                t_symbols: 256,
                p_bs: 1.0,  // 30 dBm
                p_irs: 0.1,
                a_max: 100.0,
                sigma2: 1e-14,  // -110 dBm
                sigma_z2: 1e-6,
                sigma_c2: 1e-11, // -80 dBm
                fair_total_power: false,
                d1: 6.4031242374328485, // |(4,5)| from the BS at the origin
                d2: 5.0,
                bs_angle: 0.0,
                irs_angle: 0.0,
                target_angle: 0.35,
                k0: 1e-3,
                alpha_bs_irs: 2.2,
                alpha_irs_target: 2.2,
                pfa: 1e-2,
                channel: ChannelKind::Rician { k: 0.5 },
                crb_draws: 1,
                isac: Some(IsacTemplate {
                    alpha_irs_cu: 3.0,
                    alpha_bs_cu: 3.0,
                    shadow_db: 10.0,
                    bs_pos: [0.0, 0.0],
                    irs_pos: [4.0, 5.0],
                    cu_box: [40.0, 50.0, -10.0, 0.0],
                }),
            },
            sweep_name: "crb_bound_rel".into(),
            sweep_values: vec![1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0, f64::INFINITY],
            output_path: "isac-region.csv".into(),
        },
    }
}
