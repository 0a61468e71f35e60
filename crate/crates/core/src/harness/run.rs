//! Experiment pipelines behind the CLI: sweep execution, metric records,
//! and deterministic CSV emission.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ChannelKind, ExperimentConfig, Preset};
use super::rng::trial_rng;
use crate::beamforming::{ao_crb_min, optimal_los_detection};
use crate::detection::{pd_closed_form, simulate_detection, DetectorParams};
use crate::error::{Error, Result};
use crate::isac::{comm_snr, pareto_sweep, ReceiverType};
use crate::model::{
    los_channels, rician_channel, steering_vector, Architecture, CVec, ChannelSet, SystemConfig,
    C64, HALF_WAVELENGTH,
};
use crate::snr::sensing_snr;

pub const CSV_SCHEMA_VERSION: &str = "1";

/// One evaluated operating point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scenario: String,
    pub architecture: Architecture,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub sensing_snr: Option<f64>,
    pub pd: Option<f64>,
    pub pfa: Option<f64>,
    pub crb: Option<f64>,
    pub comm_snr: Option<f64>,
    pub feasible: bool,
    pub trials: u64,
    pub seed: u64,
    pub config_hash: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

fn fmt_db(v: Option<f64>) -> String {
    fmt_opt(v.map(|x| 10.0 * x.log10()))
}

/// Render records as the versioned CSV byte stream (UTF-8, LF endings).
pub fn records_to_csv(records: &[MetricRecord]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(
        "schema_version,scenario,architecture,sweep_param,sweep_value,\
         sensing_snr_db,pd,pfa,crb_rad2,comm_snr_db,feasible,trials,seed,config_hash\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            CSV_SCHEMA_VERSION,
            r.scenario,
            r.architecture.label(),
            r.sweep_param,
            format_args!("{:.16e}", r.sweep_value),
            fmt_db(r.sensing_snr),
            fmt_opt(r.pd),
            fmt_opt(r.pfa),
            fmt_opt(r.crb),
            fmt_db(r.comm_snr),
            r.feasible,
            r.trials,
            r.seed,
            r.config_hash,
        ));
    }
    out.into_bytes()
}

/// Target channel coefficient at the scenario geometry: round-trip amplitude
/// `L(d2)` with a deterministic per-scenario phase.
pub fn target_alpha(cfg: &SystemConfig, seed: u64, scenario: &str) -> Result<C64> {
    let l2 = cfg.pl_irs_target.gain(cfg.geometry.d_irs_target)?;
    let mut rng = trial_rng(seed, &format!("{scenario}/alpha"), 0);
    let psi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Ok(C64::from_polar(l2, psi))
}

/// Synthesize the scenario's channels per the configured channel kind.
pub fn scenario_channels(
    exp: &ExperimentConfig,
    cfg: &SystemConfig,
    scenario: &str,
    draw: u64,
) -> Result<ChannelSet> {
    let alpha = target_alpha(cfg, exp.seed, scenario)?;
    let los = los_channels(cfg)?;
    let mut ch = match exp.system.channel {
        ChannelKind::Los => los.channel_set(exp.system.target_angle, alpha),
        ChannelKind::Rician { k } => {
            let mut rng = trial_rng(exp.seed, &format!("{scenario}/channels"), draw);
            let l1 = cfg.bs_irs_gain()?;
            let g_t = rician_channel(&mut rng, k, &los.g_t, l1)?;
            let g_r = rician_channel(&mut rng, k, &los.g_r, l1)?;
            ChannelSet {
                g_t,
                g_r,
                h_d: CVec::zeros(0),
                h_r: CVec::zeros(0),
                theta: exp.system.target_angle,
                alpha,
            }
        }
    };
    if let Some(isac) = &exp.system.isac {
        let mut rng = trial_rng(exp.seed, &format!("{scenario}/cu"), draw);
        let cu = [
            rng.gen_range(isac.cu_box[0]..isac.cu_box[1]),
            rng.gen_range(isac.cu_box[2]..isac.cu_box[3]),
        ];
        let dist = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let d_bs_cu = dist(isac.bs_pos, cu);
        let d_irs_cu = dist(isac.irs_pos, cu);
        let k = match exp.system.channel {
            ChannelKind::Rician { k } => k,
            ChannelKind::Los => 0.0,
        };
        // IRS -> CU link
        let l_irs_cu = exp.system.k0 * d_irs_cu.powf(-isac.alpha_irs_cu);
        let cu_angle = ((cu[1] - isac.irs_pos[1]) / d_irs_cu).asin();
        let los_hr = steering_vector(cfg.n_irs, cu_angle, HALF_WAVELENGTH)?;
        let h_r = rician_channel(
            &mut rng,
            k,
            &crate::model::CMat::from_column_slice(cfg.n_irs, 1, los_hr.as_slice()),
            l_irs_cu,
        )?;
        // BS -> CU direct link with log-normal shadow fading
        let shadow_z: f64 = rng.sample(StandardNormal);
        let shadow = 10f64.powf(shadow_z * isac.shadow_db / 10.0);
        let l_bs_cu = exp.system.k0 * d_bs_cu.powf(-isac.alpha_bs_cu) * shadow;
        let cu_angle_bs = ((cu[1] - isac.bs_pos[1]) / d_bs_cu).asin();
        let los_hd = steering_vector(cfg.m_t, cu_angle_bs, HALF_WAVELENGTH)?;
        let h_d = rician_channel(
            &mut rng,
            k,
            &crate::model::CMat::from_column_slice(cfg.m_t, 1, los_hd.as_slice()),
            l_bs_cu,
        )?;
        ch.h_r = CVec::from_column_slice(h_r.as_slice());
        ch.h_d = CVec::from_column_slice(h_d.as_slice());
    }
    Ok(ch)
}

/// Execute the configured experiment and write its CSV.
///
/// Identical resolved configs (including the seed) produce byte-identical
/// output files.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let records = match exp.preset {
        Preset::DetectSweep | Preset::McValidate | Preset::Custom => detect_pipeline(exp)?,
        Preset::CrbSweep => crb_pipeline(exp)?,
        Preset::IsacRegion => isac_pipeline(exp)?,
    };
    let bytes = records_to_csv(&records);
    std::fs::write(&exp.output_path, &bytes)?;
    Ok(records)
}

fn detect_pipeline(exp: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let hash = exp.hash();
    let mut records = Vec::new();
    for &value in &exp.sweep_values {
        let n = value as usize;
        if n < 1 || (value - n as f64).abs() > 0.0 {
            return Err(Error::Config(format!("n_irs sweep value {value} is not a count")));
        }
        for &arch in &exp.system.architectures {
            let cfg = exp.system_config(arch, n);
            let scenario = format!("{}/N={}/{}", exp.preset.label(), n, arch.label());
            let base = MetricRecord {
                scenario: scenario.clone(),
                architecture: arch,
                sweep_param: exp.sweep_name.clone(),
                sweep_value: value,
                sensing_snr: None,
                pd: None,
                pfa: None,
                crb: None,
                comm_snr: None,
                feasible: true,
                trials: 0,
                seed: exp.seed,
                config_hash: hash.clone(),
            };
            let los = los_channels(&cfg)?;
            let alpha = target_alpha(&cfg, exp.seed, &scenario)?;
            let sol = match optimal_los_detection(
                &cfg,
                &los,
                exp.system.target_angle,
                alpha,
                exp.system.pfa,
            ) {
                Ok(s) => s,
                Err(Error::Infeasible(_)) => {
                    records.push(MetricRecord { feasible: false, ..base });
                    continue;
                }
                Err(e) => return Err(e),
            };
            let ch = los.channel_set(exp.system.target_angle, alpha);
            let params = DetectorParams::from_scenario(&cfg, &ch, &sol.pattern, &sol.r)?;
            let cf = pd_closed_form(&cfg, &params, exp.system.pfa)?;
            records.push(MetricRecord {
                sensing_snr: Some(sensing_snr(&cfg, &ch, &sol.pattern, &sol.r)?),
                pd: Some(cf.pd),
                pfa: Some(cf.pfa),
                ..base.clone()
            });
            if exp.trials > 0 {
                let mc = simulate_detection(
                    &cfg,
                    &ch,
                    &sol.pattern,
                    &sol.r,
                    exp.system.pfa,
                    exp.trials,
                    exp.seed,
                )?;
                records.push(MetricRecord {
                    sensing_snr: Some(sensing_snr(&cfg, &ch, &sol.pattern, &sol.r)?),
                    pd: Some(mc.pd),
                    pfa: Some(mc.pfa),
                    trials: exp.trials,
                    ..base
                });
            }
        }
    }
    Ok(records)
}

fn crb_pipeline(exp: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let hash = exp.hash();
    let mut records = Vec::new();
    for &value in &exp.sweep_values {
        let n = value as usize;
        for &arch in &exp.system.architectures {
            let cfg = exp.system_config(arch, n);
            let scenario = format!("{}/N={}/{}", exp.preset.label(), n, arch.label());
            let draws = exp.system.crb_draws.max(1) as u64;
            let mut acc = 0.0;
            let mut snr_acc = 0.0;
            let mut ok = true;
            for draw in 0..draws {
                let ch = scenario_channels(exp, &cfg, &scenario, draw)?;
                match ao_crb_min(&cfg, &ch, None, 1e-6, 250) {
                    Ok(sol) => {
                        acc += sol.objective;
                        snr_acc += sensing_snr(&cfg, &ch, &sol.pattern, &sol.r)?;
                    }
                    Err(Error::SingularFim(_)) | Err(Error::Infeasible(_)) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            records.push(MetricRecord {
                scenario,
                architecture: arch,
                sweep_param: exp.sweep_name.clone(),
                sweep_value: value,
                sensing_snr: ok.then(|| snr_acc / draws as f64),
                pd: None,
                pfa: None,
                crb: ok.then(|| acc / draws as f64),
                comm_snr: None,
                feasible: ok,
                trials: 0,
                seed: exp.seed,
                config_hash: hash.clone(),
            });
        }
    }
    Ok(records)
}

fn isac_pipeline(exp: &ExperimentConfig) -> Result<Vec<MetricRecord>> {
    let hash = exp.hash();
    let arch = Architecture::FullyPassive;
    // the swept values are CRB bounds relative to the achievable minimum;
    // N comes from the template's fixed element count (paper setup: N = 8)
    let n = 8;
    let cfg = exp.system_config(arch, n);
    let scenario = format!("{}/N={}", exp.preset.label(), n);
    let ch = scenario_channels(exp, &cfg, &scenario, 0)?;
    let anchor = ao_crb_min(&cfg, &ch, None, 1e-6, 300)?;
    let crb_min = anchor.objective;
    let grid: Vec<f64> = exp.sweep_values.iter().map(|&m| crb_min * m).collect();
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("crb_bound_rel sweep must be ascending".into()));
    }
    let points = pareto_sweep(&cfg, &ch, &grid, ReceiverType::TypeII)?;
    let mut records = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let gamma_1 = comm_snr(ReceiverType::TypeI, &ch, &p.pattern, &p.tx, cfg.sigma_c2)?;
        let _ = gamma_1;
        records.push(MetricRecord {
            scenario: scenario.clone(),
            architecture: arch,
            sweep_param: exp.sweep_name.clone(),
            sweep_value: exp.sweep_values[i],
            sensing_snr: None,
            pd: None,
            pfa: None,
            crb: Some(p.crb_achieved.min(p.crb_bound)),
            comm_snr: Some(p.comm_snr),
            feasible: p.feasible,
            trials: 0,
            seed: exp.seed,
            config_hash: hash.clone(),
        });
    }
    Ok(records)
}
