//! Cascaded steering vectors shared by the SNR, detection, estimation, and
//! beamforming modules.
//!
//! The rank-1 point-target response collapses every architecture's cascade to
//! a handful of vectors: `p_t = G_t^T Phi a(theta)` on the illumination side
//! and either `p_r = G_r Phi a(theta)` (fully-passive return path) or the
//! sensor steering `b(theta)` (semi-passive/active). Working with these
//! vectors turns all the trace expressions into inner products, O(N max(M))
//! instead of O(N^3), which is what makes the large-N sweeps cheap.

use crate::error::Result;
use crate::model::{
    steering_derivative, steering_vector, Architecture, CMat, CVec, ChannelSet, ReflectPattern,
    SystemConfig, TransmitCovariance, C64, HALF_WAVELENGTH,
};

/// Architecture-specific echo path vectors.
#[derive(Debug, Clone)]
pub enum SensePath {
    /// Fully-passive: the echo returns through the surface to the BS arrays.
    Monostatic { p_r: CVec, p_r_dot: CVec },
    /// Semi-passive/active: sensors at the surface receive directly.
    Sensor { b: CVec, b_dot: CVec },
}

/// Cascade vectors for one (channels, pattern) pair at the target angle.
#[derive(Debug, Clone)]
pub struct Cascade {
    /// `G_t^T Phi a(theta)`, length M_t.
    pub p_t: CVec,
    /// `G_t^T Phi da/dtheta`, length M_t.
    pub p_t_dot: CVec,
    pub path: SensePath,
    /// IRS steering toward the target, length N.
    pub a_irs: CVec,
    pub a_irs_dot: CVec,
}

impl Cascade {
    /// Receive-side direction the rank-1 mean signal lives along.
    pub fn rx_dir(&self) -> &CVec {
        match &self.path {
            SensePath::Monostatic { p_r, .. } => p_r,
            SensePath::Sensor { b, .. } => b,
        }
    }
}

pub fn cascade(cfg: &SystemConfig, ch: &ChannelSet, pat: &ReflectPattern) -> Result<Cascade> {
    cascade_at(cfg, ch, pat, ch.theta)
}

/// Cascade evaluated at an arbitrary probe angle (grid searches, derivatives).
pub fn cascade_at(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    theta: f64,
) -> Result<Cascade> {
    cfg.validate()?;
    ch.validate(cfg)?;
    pat.validate(cfg)?;
    let a = steering_vector(cfg.n_irs, theta, HALF_WAVELENGTH)?;
    let a_dot = steering_derivative(cfg.n_irs, theta, HALF_WAVELENGTH)?;
    let v = pat.diag();
    let refl = v.component_mul(&a);
    let refl_dot = v.component_mul(&a_dot);
    let gt_t = ch.g_t.transpose();
    let p_t = &gt_t * &refl;
    let p_t_dot = &gt_t * &refl_dot;
    let path = match cfg.architecture {
        Architecture::FullyPassive => SensePath::Monostatic {
            p_r: &ch.g_r * &refl,
            p_r_dot: &ch.g_r * &refl_dot,
        },
        Architecture::SemiPassive | Architecture::Active => SensePath::Sensor {
            b: steering_vector(cfg.m_r, theta, HALF_WAVELENGTH)?,
            b_dot: steering_derivative(cfg.m_r, theta, HALF_WAVELENGTH)?,
        },
    };
    Ok(Cascade { p_t, p_t_dot, path, a_irs: a, a_irs_dot: a_dot })
}

/// `u^H R^T w`, evaluated as `w'^T (R conj(u))'`-free inner products.
///
/// The CRB closed forms contract transmit-side vectors against `R^T`; with
/// the transpose identity `u^H R^T w = w^T R conj(u)` this costs one
/// matrix-vector product on the untransposed covariance.
pub fn rt_form(r: &CMat, u: &CVec, w: &CVec) -> C64 {
    let ru = r * u.conjugate();
    w.dot(&ru)
}

/// The six scalars the partitioned-FIM closed forms are built from.
#[derive(Debug, Clone, Copy)]
pub struct CrbTerms {
    /// `p_t^H R^T p_t`
    pub b1: f64,
    /// `dp_t^H R^T dp_t`
    pub b2: f64,
    /// `p_t^H R^T dp_t`
    pub b3: C64,
    /// Squared norm of the receive-side direction.
    pub a1: f64,
    /// Squared norm of its derivative.
    pub a2: f64,
    /// `d(dir)^H dir`.
    pub a3: C64,
}

impl CrbTerms {
    pub fn from_cascade(cas: &Cascade, r: &TransmitCovariance) -> Self {
        let rm = r.matrix();
        let ru = rm * cas.p_t.conjugate();
        let b1 = cas.p_t.dot(&ru).re;
        let b3 = cas.p_t_dot.dot(&ru);
        let b2 = cas.p_t_dot.dot(&(rm * cas.p_t_dot.conjugate())).re;
        let (a1, a2, a3) = match &cas.path {
            SensePath::Monostatic { p_r, p_r_dot } => {
                (p_r.norm_squared(), p_r_dot.norm_squared(), p_r_dot.dotc(p_r))
            }
            SensePath::Sensor { b, b_dot } => {
                (b.norm_squared(), b_dot.norm_squared(), b_dot.dotc(b))
            }
        };
        Self { b1, b2, b3, a1, a2, a3 }
    }

    /// Schur-complement denominator of the angle CRB:
    /// `b1 (a2 - |a3|^2/a1) + a1 (b2 - |b3|^2/b1)`.
    pub fn schur_denominator(&self) -> f64 {
        let rx = self.a2 - self.a3.norm_sqr() / self.a1;
        let tx = self.b2 - self.b3.norm_sqr() / self.b1;
        self.b1 * rx + self.a1 * tx
    }
}
