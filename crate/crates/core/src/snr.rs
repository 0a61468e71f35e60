//! Closed-form sensing SNR for the three architectures, plus the active-IRS
//! radiated-power accounting used as an optimization constraint.

use crate::cascade::{cascade, Cascade, SensePath};
use crate::error::Result;
use crate::model::{
    Architecture, CVec, ChannelSet, ReflectPattern, SystemConfig, TransmitCovariance, C64,
};

/// Sensing SNR (linear) of the scenario under transmit covariance `r`.
///
/// Fully-passive: `tr(G_r Phi^T H1 Phi G_t R G_t^H Phi^H H1^H Phi^* G_r^H) / sigma2`;
/// semi-passive: `tr(H2 Phi G_t R G_t^H Phi^H H2^H) / sigma2`;
/// active: the same numerator over `tr(Phi^H H2^H H2 Phi) sigma_z2 + sigma2`.
/// All traces are reduced through the rank-1 target response.
pub fn sensing_snr(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
) -> Result<f64> {
    let cas = cascade(cfg, ch, pat)?;
    let alpha2 = ch.alpha.norm_sqr();
    let b1 = cas.p_t.dot(&(r.matrix() * cas.p_t.conjugate())).re;
    let signal = alpha2 * cas.rx_dir().norm_squared() * b1;
    let noise = match cfg.architecture {
        Architecture::FullyPassive | Architecture::SemiPassive => cfg.sigma2,
        Architecture::Active => {
            cfg.sigma_z2 * reflect_noise_trace(&cas, &pat.diag(), alpha2) + cfg.sigma2
        }
    };
    Ok((signal / noise).max(0.0))
}

/// `tr(Phi^H H2^H H2 Phi)` through the rank-1 response:
/// `|alpha|^2 ||b||^2 sum_n |v_n|^2 |a_n(theta)|^2`.
pub(crate) fn reflect_noise_trace(cas: &Cascade, v: &CVec, alpha2: f64) -> f64 {
    let b_norm2 = match &cas.path {
        SensePath::Sensor { b, .. } => b.norm_squared(),
        SensePath::Monostatic { .. } => 0.0,
    };
    let weighted: f64 = v
        .iter()
        .zip(cas.a_irs.iter())
        .map(|(vn, an)| vn.norm_sqr() * an.norm_sqr())
        .sum();
    alpha2 * b_norm2 * weighted
}

/// Radiated power at the active surface:
/// `tr(Phi G_t R G_t^H Phi^H) + sigma_z2 tr(Phi Phi^H)`.
pub fn active_reflect_power(
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
    sigma_z2: f64,
) -> Result<f64> {
    let v = pat.diag();
    if v.len() != ch.g_t.nrows() {
        return Err(crate::error::Error::dims("pattern length must match g_t rows"));
    }
    let rg = r.matrix() * ch.g_t.adjoint(); // M_t x N, column n = R g_n^H
    let mut forwarded = 0.0;
    for n in 0..ch.g_t.nrows() {
        let row = ch.g_t.row(n);
        let col = rg.column(n);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..row.len() {
            acc += row[k] * col[k];
        }
        forwarded += v[n].norm_sqr() * acc.re;
    }
    let idle = sigma_z2 * v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(forwarded + idle)
}
