//! Experiment configuration: strict TOML ingestion, preset defaults, and the
//! resolved (linear-unit) experiment description.
//!
//! All dB-valued keys live here and nowhere else: `*_db` power keys are dBm,
//! `k0_db` is a plain dB ratio. The resolved config carries linear watts.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::Architecture;

/// Experiment presets; capture the published evaluation setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Detection probability vs element count, LoS links.
    DetectSweep,
    /// Optimized angle-estimation CRB vs element count, Rician links.
    CrbSweep,
    /// Communication-SNR vs sensing-CRB frontier.
    IsacRegion,
    /// Closed-form vs Monte-Carlo detection validation.
    McValidate,
    /// No defaults beyond documented fallbacks; everything from the file.
    Custom,
}

impl Preset {
    pub fn label(self) -> &'static str {
        match self {
            Preset::DetectSweep => "detect-sweep",
            Preset::CrbSweep => "crb-sweep",
            Preset::IsacRegion => "isac-region",
            Preset::McValidate => "mc-validate",
            Preset::Custom => "custom",
        }
    }
}

/// Which channel synthesis the scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// Deterministic rank-1 LoS links.
    Los,
    /// Rician fading around the LoS component.
    Rician { k: f64 },
}

/// Resolved scenario template (linear units throughout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTemplate {
    pub architectures: Vec<Architecture>,
    pub m_t: usize,
    pub m_r: usize,
    pub t_symbols: usize,
    /// BS budget for the active architecture (watts).
    pub p_bs: f64,
    /// Active-surface budget (watts).
    pub p_irs: f64,
    pub a_max: f64,
    pub sigma2: f64,
    pub sigma_z2: f64,
    pub sigma_c2: f64,
    /// Grant passive architectures `p_bs + p_irs` so total radiated power
    /// matches the active case.
    pub fair_total_power: bool,
    pub d1: f64,
    pub d2: f64,
    pub bs_angle: f64,
    pub irs_angle: f64,
    pub target_angle: f64,
    pub k0: f64,
    pub alpha_bs_irs: f64,
    pub alpha_irs_target: f64,
    pub pfa: f64,
    pub channel: ChannelKind,
    /// Channel draws averaged per sweep point in the CRB pipeline.
    pub crb_draws: u32,
    /// CU-link extras for the ISAC pipeline.
    pub isac: Option<IsacTemplate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsacTemplate {
    pub alpha_irs_cu: f64,
    pub alpha_bs_cu: f64,
    /// Log-normal shadow-fading standard deviation on the BS-CU link, dB.
    pub shadow_db: f64,
    pub bs_pos: [f64; 2],
    pub irs_pos: [f64; 2],
    /// CU drawn uniformly in [x0, x1] x [y0, y1].
    pub cu_box: [f64; 4],
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub trials: u64,
    pub system: ScenarioTemplate,
    pub sweep_name: String,
    pub sweep_values: Vec<f64>,
    pub output_path: String,
}

impl ExperimentConfig {
    /// Stable digest of the resolved scientific config (16 hex chars).
    /// The output path is excluded so relocating a run does not change it.
    pub fn hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.output_path = String::new();
        let json = serde_json::to_string(&hashed).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Materialize the per-architecture system config at one sweep point.
    pub fn system_config(
        &self,
        arch: Architecture,
        n_irs: usize,
    ) -> crate::model::SystemConfig {
        let t = &self.system;
        let p_bs = if t.fair_total_power && arch.is_passive() {
            t.p_bs + t.p_irs
        } else {
            t.p_bs
        };
        crate::model::SystemConfig {
            m_t: t.m_t,
            m_r: t.m_r,
            n_irs,
            t_symbols: t.t_symbols,
            p_bs,
            p_irs: t.p_irs,
            a_max: if arch == Architecture::Active { t.a_max } else { 1.0 },
            sigma2: t.sigma2,
            sigma_z2: t.sigma_z2,
            sigma_c2: t.sigma_c2,
            architecture: arch,
            geometry: crate::model::Geometry {
                d_bs_irs: t.d1,
                d_irs_target: t.d2,
                bs_angle: t.bs_angle,
                irs_angle: t.irs_angle,
            },
            pl_bs_irs: crate::model::PathLossModel { k0: t.k0, d0: 1.0, alpha0: t.alpha_bs_irs },
            pl_irs_target: crate::model::PathLossModel {
                k0: t.k0,
                d0: 1.0,
                alpha0: t.alpha_irs_target,
            },
        }
    }
}

pub(crate) fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

// ---------------------------------------------------------------------------
// TOML document (strict: unknown keys are fatal)
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    preset: Option<Preset>,
    seed: Option<u64>,
    trials: Option<u64>,
    system: Option<SystemDoc>,
    sweep: Option<SweepDoc>,
    output: Option<OutputDoc>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    architecture: Option<String>,
    m_t: Option<usize>,
    m_r: Option<usize>,
    t_symbols: Option<usize>,
    p_bs_db: Option<f64>,
    p_irs_db: Option<f64>,
    a_max: Option<f64>,
    sigma2_db: Option<f64>,
    sigma_z2_db: Option<f64>,
    sigma_c2_db: Option<f64>,
    d1_m: Option<f64>,
    d2_m: Option<f64>,
    k0_db: Option<f64>,
    alpha_bs_irs: Option<f64>,
    alpha_irs_target: Option<f64>,
    bs_angle_rad: Option<f64>,
    irs_angle_rad: Option<f64>,
    target_angle_rad: Option<f64>,
    pfa: Option<f64>,
    channel: Option<String>,
    rician_k: Option<f64>,
    fair_total_power: Option<bool>,
    crb_draws: Option<u32>,
    alpha_irs_cu: Option<f64>,
    alpha_bs_cu: Option<f64>,
    shadow_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    name: Option<String>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    path: Option<String>,
}

fn parse_architectures(s: &str) -> Result<Vec<Architecture>> {
    match s {
        "all" => Ok(vec![
            Architecture::FullyPassive,
            Architecture::SemiPassive,
            Architecture::Active,
        ]),
        "fully-passive" => Ok(vec![Architecture::FullyPassive]),
        "semi-passive" => Ok(vec![Architecture::SemiPassive]),
        "active" => Ok(vec![Architecture::Active]),
        other => Err(Error::Config(format!(
            "unknown architecture \"{other}\" (expected all, fully-passive, semi-passive, active)"
        ))),
    }
}

/// Parse a TOML experiment document against a preset's defaults.
///
/// The preset comes from the document's `preset` key or from
/// `preset_override` (the CLI subcommand); if both are present they must
/// agree. Unknown keys and a missing `seed` are fatal.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, None)
}

pub fn parse_config_with(
    text: &str,
    preset_override: Option<Preset>,
) -> Result<ExperimentConfig> {
    let doc: ConfigDoc =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let preset = match (doc.preset, preset_override) {
        (Some(p), Some(q)) if p != q => {
            return Err(Error::Config(format!(
                "config preset \"{}\" disagrees with the requested \"{}\"",
                p.label(),
                q.label()
            )));
        }
        (Some(p), _) => p,
        (None, Some(q)) => q,
        (None, None) => {
            return Err(Error::Config("missing required key `preset`".into()));
        }
    };
    let seed = doc
        .seed
        .ok_or_else(|| Error::Config("missing required key `seed`".into()))?;

    let d = super::presets::defaults(preset);
    let s = doc.system.unwrap_or_default();
    let sw = doc.sweep.unwrap_or_default();
    let out = doc.output.unwrap_or_default();

    let architectures = match s.architecture.as_deref() {
        Some(spec) => parse_architectures(spec)?,
        None => d.system.architectures.clone(),
    };
    let channel = match s.channel.as_deref() {
        Some("los") => ChannelKind::Los,
        Some("rician") => {
            ChannelKind::Rician { k: s.rician_k.unwrap_or(default_k(&d.system.channel)) }
        }
        Some(other) => {
            return Err(Error::Config(format!(
                "unknown channel \"{other}\" (expected los or rician)"
            )))
        }
        None => match (s.rician_k, d.system.channel) {
            (Some(k), _) => ChannelKind::Rician { k },
            (None, c) => c,
        },
    };

    let system = ScenarioTemplate {
        architectures,
        m_t: s.m_t.unwrap_or(d.system.m_t),
        m_r: s.m_r.unwrap_or(d.system.m_r),
        t_symbols: s.t_symbols.unwrap_or(d.system.t_symbols),
        p_bs: s.p_bs_db.map(dbm_to_watts).unwrap_or(d.system.p_bs),
        p_irs: s.p_irs_db.map(dbm_to_watts).unwrap_or(d.system.p_irs),
        a_max: s.a_max.unwrap_or(d.system.a_max),
        sigma2: s.sigma2_db.map(dbm_to_watts).unwrap_or(d.system.sigma2),
        sigma_z2: s.sigma_z2_db.map(dbm_to_watts).unwrap_or(d.system.sigma_z2),
        sigma_c2: s.sigma_c2_db.map(dbm_to_watts).unwrap_or(d.system.sigma_c2),
        fair_total_power: s.fair_total_power.unwrap_or(d.system.fair_total_power),
        d1: s.d1_m.unwrap_or(d.system.d1),
        d2: s.d2_m.unwrap_or(d.system.d2),
        bs_angle: s.bs_angle_rad.unwrap_or(d.system.bs_angle),
        irs_angle: s.irs_angle_rad.unwrap_or(d.system.irs_angle),
        target_angle: s.target_angle_rad.unwrap_or(d.system.target_angle),
        k0: s.k0_db.map(db_to_linear).unwrap_or(d.system.k0),
        alpha_bs_irs: s.alpha_bs_irs.unwrap_or(d.system.alpha_bs_irs),
        alpha_irs_target: s.alpha_irs_target.unwrap_or(d.system.alpha_irs_target),
        pfa: s.pfa.unwrap_or(d.system.pfa),
        channel,
        crb_draws: s.crb_draws.unwrap_or(d.system.crb_draws),
        isac: match &d.system.isac {
            Some(t) => Some(IsacTemplate {
                alpha_irs_cu: s.alpha_irs_cu.unwrap_or(t.alpha_irs_cu),
                alpha_bs_cu: s.alpha_bs_cu.unwrap_or(t.alpha_bs_cu),
                shadow_db: s.shadow_db.unwrap_or(t.shadow_db),
                ..t.clone()
            }),
            None => None,
        },
    };

    let cfg = ExperimentConfig {
        preset,
        seed,
        trials: doc.trials.unwrap_or(d.trials),
        system,
        sweep_name: sw.name.unwrap_or(d.sweep_name),
        sweep_values: sw.values.unwrap_or(d.sweep_values),
        output_path: out.path.unwrap_or(d.output_path),
    };
    validate_config(&cfg)?;
    Ok(cfg)
}

fn default_k(kind: &ChannelKind) -> f64 {
    match kind {
        ChannelKind::Rician { k } => *k,
        ChannelKind::Los => 0.5,
    }
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.sweep_values.is_empty() {
        return Err(Error::Config("sweep values must be non-empty".into()));
    }
    if cfg.sweep_values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Config("sweep values must be positive".into()));
    }
    if !(cfg.system.pfa > 0.0 && cfg.system.pfa < 1.0) {
        return Err(Error::Config("pfa must lie in (0,1)".into()));
    }
    if cfg.system.architectures.is_empty() {
        return Err(Error::Config("at least one architecture is required".into()));
    }
    Ok(())
}
