//! Fisher information and Cramér-Rao bounds for target-angle estimation,
//! with a finite-difference FIM oracle and the grid MLE.
//!
//! The unknown parameter vector is `eta = [theta, Re(alpha), Im(alpha)]`.
//! Closed forms follow the partitioned-FIM route: with `B` the rank-1
//! cascade and `Bdot` its angle derivative,
//!
//! ```text
//! F_tt = (2T|alpha|^2/sigma2) tr(Bdot R Bdot^H)
//! F_ta = (2T/sigma2) Re{ alpha^* tr(B R Bdot^H) [1, j] }
//! F_aa = (2T/sigma2) tr(B R B^H) I_2
//! CRB(theta) = [F^-1]_{1,1} = 1 / (F_tt - F_ta F_aa^-1 F_ta^T)
//! ```
//!
//! [`fim_point_target`] evaluates the traces on dense cascade matrices;
//! [`crb_angle`] evaluates the algebraically expanded vector form. The two
//! routes are independent implementations and are cross-checked in tests
//! together with [`numeric_fim`], the finite-difference oracle.

use nalgebra::Matrix3;

use crate::cascade::{cascade_at, CrbTerms, SensePath};
use crate::error::{Error, Result};
use crate::model::{
    realize_block, CMat, ChannelSet, ReflectPattern, SystemConfig, TransmitCovariance, C64,
};

/// Relative floor below which the Schur complement counts as singular.
const SINGULAR_REL: f64 = 1e-14;

/// Fisher information over `eta = [theta, Re(alpha), Im(alpha)]` plus the
/// angle CRB extracted from it.
#[derive(Debug, Clone, PartialEq)]
pub struct FimRecord {
    pub f: Matrix3<f64>,
    /// `[F^-1]_{1,1}` in rad^2.
    pub crb_theta: f64,
}

fn cascade_matrices(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
) -> Result<(CMat, CMat)> {
    let cas = cascade_at(cfg, ch, pat, ch.theta)?;
    let (dir, dir_dot) = match &cas.path {
        SensePath::Monostatic { p_r, p_r_dot } => (p_r.clone(), p_r_dot.clone()),
        SensePath::Sensor { b, b_dot } => (b.clone(), b_dot.clone()),
    };
    let b = &dir * cas.p_t.transpose();
    let b_dot = &dir_dot * cas.p_t.transpose() + &dir * cas.p_t_dot.transpose();
    Ok((b, b_dot))
}

fn trace_xr_yh(x: &CMat, r: &CMat, y: &CMat) -> C64 {
    // tr(X R Y^H) = sum_ij (X R)_ij conj(Y_ij)
    let xr = x * r;
    xr.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Fisher information matrix of the point-target scenario via the dense
/// cascade traces. The noise covariance is parameter-free (`sigma2 I`), so
/// its derivative term vanishes identically.
pub fn fim_point_target(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
) -> Result<FimRecord> {
    let alpha = ch.alpha;
    if alpha.norm_sqr() == 0.0 {
        return Err(Error::SingularFim("alpha = 0 carries no target information".into()));
    }
    let (b, b_dot) = cascade_matrices(cfg, ch, pat)?;
    let t = cfg.t_symbols as f64;
    let scale = 2.0 * t / cfg.sigma2;
    let t_dd = trace_xr_yh(&b_dot, r.matrix(), &b_dot).re;
    let tau = trace_xr_yh(&b, r.matrix(), &b_dot);
    let t_bb = trace_xr_yh(&b, r.matrix(), &b).re;

    let f_tt = scale * alpha.norm_sqr() * t_dd;
    let at = alpha.conj() * tau;
    let f_t_re = scale * at.re;
    let f_t_im = scale * (C64::i() * at).re;
    let f_aa = scale * t_bb;

    let f = Matrix3::new(
        f_tt, f_t_re, f_t_im, //
        f_t_re, f_aa, 0.0, //
        f_t_im, 0.0, f_aa,
    );
    let crb_theta = invert_for_theta(&f)?;
    Ok(FimRecord { f, crb_theta })
}

/// `[F^-1]_{1,1}` through the 2x2 Schur complement, with the singularity
/// policy applied.
pub fn invert_for_theta(f: &Matrix3<f64>) -> Result<f64> {
    let f_tt = f[(0, 0)];
    let f_aa = f[(1, 1)];
    if !(f_aa > 0.0) {
        return Err(Error::SingularFim("alpha block of the FIM is not positive".into()));
    }
    let schur = f_tt - (f[(0, 1)].powi(2) + f[(0, 2)].powi(2)) / f_aa;
    if !(schur > SINGULAR_REL * f_tt.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularFim(format!(
            "Schur complement {schur:.3e} below the singularity floor"
        )));
    }
    Ok(1.0 / schur)
}

/// Closed-form angle CRB via the expanded vector route (O(N max(M)) cost):
///
/// ```text
/// CRB = (sigma2 / (2T|alpha|^2)) /
///       [ b1 (a2 - |a3|^2/a1) + a1 (b2 - |b3|^2/b1) ]
/// ```
///
/// where the `b` scalars contract `p_t`, `dp_t` against `R^T` and the `a`
/// scalars are norms of the receive-side direction (`p_r` for the
/// fully-passive surface, the sensor steering `b(theta)` otherwise; the
/// active bound drops the reflection-noise term and therefore coincides
/// with the semi-passive form evaluated at the active pattern).
pub fn crb_angle(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
) -> Result<f64> {
    if ch.alpha.norm_sqr() == 0.0 {
        return Err(Error::SingularFim("alpha = 0 carries no target information".into()));
    }
    let cas = cascade_at(cfg, ch, pat, ch.theta)?;
    let terms = CrbTerms::from_cascade(&cas, r);
    crb_from_terms(cfg, ch.alpha, &terms)
}

pub(crate) fn crb_from_terms(cfg: &SystemConfig, alpha: C64, terms: &CrbTerms) -> Result<f64> {
    if !(terms.a1 > 0.0) || !(terms.b1 > 0.0) {
        return Err(Error::SingularFim(
            "cascade carries no signal energy (a1 or b1 vanished)".into(),
        ));
    }
    let d = terms.schur_denominator();
    let scale = terms.b1 * terms.a2 + terms.a1 * terms.b2;
    if !(d > SINGULAR_REL * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::SingularFim(format!(
            "angle information vanished (denominator {d:.3e})"
        )));
    }
    let t = cfg.t_symbols as f64;
    Ok(cfg.sigma2 / (2.0 * t * alpha.norm_sqr() * d))
}

/// Finite-difference FIM oracle: central differences of the stacked noiseless
/// mean signal in all three parameters. Test-support code; the closed forms
/// are checked against it.
pub fn numeric_fim(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
    step: f64,
) -> Result<Matrix3<f64>> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::invalid(format!("step must lie in [1e-7, 1e-3], got {step}")));
    }
    let x = realize_block(r, cfg.t_symbols)?;
    let mean = |theta: f64, alpha: C64| -> Result<CMat> {
        let cas = cascade_at(cfg, ch, pat, theta)?;
        let beta = x.transpose() * &cas.p_t;
        Ok((cas.rx_dir() * beta.transpose()) * alpha)
    };
    let theta = ch.theta;
    let alpha = ch.alpha;
    let diffs: [CMat; 3] = [
        (mean(theta + step, alpha)? - mean(theta - step, alpha)?) / C64::new(2.0 * step, 0.0),
        (mean(theta, alpha + C64::new(step, 0.0))? - mean(theta, alpha - C64::new(step, 0.0))?)
            / C64::new(2.0 * step, 0.0),
        (mean(theta, alpha + C64::new(0.0, step))? - mean(theta, alpha - C64::new(0.0, step))?)
            / C64::new(2.0 * step, 0.0),
    ];
    let mut f = Matrix3::zeros();
    for i in 0..3 {
        for k in 0..3 {
            let inner: C64 =
                diffs[i].iter().zip(diffs[k].iter()).map(|(a, b)| a.conj() * b).sum();
            f[(i, k)] = 2.0 / cfg.sigma2 * inner.re;
        }
    }
    // symmetrize away the last-bit asymmetry of the differencing
    let ft = f.transpose();
    Ok((f + ft) * 0.5)
}

/// Maximum-likelihood angle estimate over a dense grid with golden-section
/// refinement, plus the closed-form conditional alpha estimate.
pub fn mle_angle(
    cfg: &SystemConfig,
    y: &CMat,
    x: &CMat,
    pat: &ReflectPattern,
    ch: &ChannelSet,
    grid: &[f64],
) -> Result<(f64, C64)> {
    let out = crate::detection::glrt_statistic(cfg, y, x, pat, ch, grid)?;
    Ok((out.theta_mle, out.alpha_mle))
}
