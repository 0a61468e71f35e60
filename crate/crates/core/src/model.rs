//! Scenario types, array steering geometry, path loss, and channel synthesis.
//!
//! Everything downstream (SNR evaluation, detectors, CRBs, beamforming, the
//! ISAC sweep) consumes the types defined here. All types are immutable after
//! construction and all functions are pure given their inputs plus an explicit
//! RNG, so values can be shared freely across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Uniform linear arrays with half-wavelength element spacing everywhere.
pub const HALF_WAVELENGTH: f64 = 0.5;

/// Which of the three reflecting-surface architectures a scenario uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    /// Phase-only elements; echoes return to the BS through the surface.
    FullyPassive,
    /// Phase-only elements plus dedicated receive sensors at the surface.
    SemiPassive,
    /// Amplifying elements (gain up to `a_max`) plus sensors; amplification
    /// injects reflection noise of power `sigma_z2` per element.
    Active,
}

impl Architecture {
    pub fn is_passive(self) -> bool {
        !matches!(self, Architecture::Active)
    }

    /// Echoes are received by sensors mounted at the surface.
    pub fn senses_at_irs(self) -> bool {
        !matches!(self, Architecture::FullyPassive)
    }

    pub fn label(self) -> &'static str {
        match self {
            Architecture::FullyPassive => "fully-passive",
            Architecture::SemiPassive => "semi-passive",
            Architecture::Active => "active",
        }
    }
}

/// Distance power law `L(d) = K0 (d/d0)^-alpha0`, linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    /// Loss at the reference distance, linear (0 < k0 <= 1).
    pub k0: f64,
    /// Reference distance in meters.
    pub d0: f64,
    /// Path-loss exponent for this link type.
    pub alpha0: f64,
}

impl PathLossModel {
    pub fn new(k0: f64, d0: f64, alpha0: f64) -> Result<Self> {
        if !(k0 > 0.0 && k0 <= 1.0) || !k0.is_finite() {
            return Err(Error::invalid(format!("path loss k0 must be in (0,1], got {k0}")));
        }
        if !(d0 > 0.0) || !(alpha0 > 0.0) {
            return Err(Error::invalid(format!(
                "path loss requires d0 > 0 and alpha0 > 0, got d0={d0}, alpha0={alpha0}"
            )));
        }
        Ok(Self { k0, d0, alpha0 })
    }

    /// Linear gain at distance `d` meters.
    pub fn gain(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::invalid(format!("path loss distance must be > 0, got {d}")));
        }
        Ok(self.k0 * (d / self.d0).powf(-self.alpha0))
    }
}

/// Deployment geometry: link distances plus the mutual BS/IRS aspect angles.
///
/// Angles are measured from the respective array broadside, domain
/// (-pi/2, pi/2). The target angle lives in [`ChannelSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    /// BS-IRS distance d1 in meters.
    pub d_bs_irs: f64,
    /// IRS-target distance d2 in meters.
    pub d_irs_target: f64,
    /// Angle of the IRS as seen from the BS arrays.
    pub bs_angle: f64,
    /// Angle of the BS as seen from the IRS aperture.
    pub irs_angle: f64,
}

impl Geometry {
    pub fn broadside(d_bs_irs: f64, d_irs_target: f64) -> Self {
        Self { d_bs_irs, d_irs_target, bs_angle: 0.0, irs_angle: 0.0 }
    }
}

/// Full scenario description. Powers and noise levels are linear watts; dB
/// conversions happen only at the config-ingestion boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antenna count M_t at the BS.
    pub m_t: usize,
    /// Receive antenna count at the BS, or sensor count at the IRS (M_r).
    pub m_r: usize,
    /// Reflecting element count N.
    pub n_irs: usize,
    /// Sensing symbol count T.
    pub t_symbols: usize,
    /// BS power budget in watts.
    pub p_bs: f64,
    /// Active-IRS power budget in watts (unused for passive architectures).
    pub p_irs: f64,
    /// Maximum per-element amplification gain; 1 for passive architectures.
    pub a_max: f64,
    /// Receiver noise power per antenna/sensor (watts).
    pub sigma2: f64,
    /// Active-IRS reflection-noise power per element (watts).
    pub sigma_z2: f64,
    /// CU receiver noise power (watts), used by the ISAC model.
    pub sigma_c2: f64,
    pub architecture: Architecture,
    pub geometry: Geometry,
    /// Path loss law for the BS-IRS (and IRS-BS) link.
    pub pl_bs_irs: PathLossModel,
    /// Path loss law for the IRS-target link.
    pub pl_irs_target: PathLossModel,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_t < 1 || self.m_r < 1 || self.n_irs < 1 || self.t_symbols < 1 {
            return Err(Error::invalid("antenna, element, and symbol counts must all be >= 1"));
        }
        for (name, v) in [
            ("p_bs", self.p_bs),
            ("p_irs", self.p_irs),
            ("sigma2", self.sigma2),
            ("sigma_z2", self.sigma_z2),
            ("sigma_c2", self.sigma_c2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.a_max >= 1.0) {
            return Err(Error::invalid(format!("a_max must be >= 1, got {}", self.a_max)));
        }
        if self.architecture.is_passive() && self.a_max != 1.0 {
            return Err(Error::invalid(
                "passive architectures force a_max = 1 (elements cannot amplify)",
            ));
        }
        if !(self.geometry.d_bs_irs > 0.0) || !(self.geometry.d_irs_target > 0.0) {
            return Err(Error::invalid("link distances must be > 0"));
        }
        Ok(())
    }

    /// Linear gain of the BS-IRS link at the configured distance.
    pub fn bs_irs_gain(&self) -> Result<f64> {
        self.pl_bs_irs.gain(self.geometry.d_bs_irs)
    }
}

/// One scenario's channel realization plus the target parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS -> IRS channel, N x M_t.
    pub g_t: CMat,
    /// IRS -> BS channel, M_r x N (used by the fully-passive return path).
    pub g_r: CMat,
    /// BS -> CU direct channel, length M_t (ISAC scenarios; empty otherwise).
    pub h_d: CVec,
    /// IRS -> CU channel, length N (ISAC scenarios; empty otherwise).
    pub h_r: CVec,
    /// Target angle with respect to the IRS aperture, radians.
    pub theta: f64,
    /// Complex coefficient of the IRS-target-IRS round trip.
    pub alpha: C64,
}

impl ChannelSet {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.g_t.nrows() != cfg.n_irs || self.g_t.ncols() != cfg.m_t {
            return Err(Error::dims(format!(
                "g_t is {}x{}, expected {}x{}",
                self.g_t.nrows(),
                self.g_t.ncols(),
                cfg.n_irs,
                cfg.m_t
            )));
        }
        if self.g_r.nrows() != cfg.m_r || self.g_r.ncols() != cfg.n_irs {
            return Err(Error::dims(format!(
                "g_r is {}x{}, expected {}x{}",
                self.g_r.nrows(),
                self.g_r.ncols(),
                cfg.m_r,
                cfg.n_irs
            )));
        }
        if !self.h_d.is_empty() && self.h_d.len() != cfg.m_t {
            return Err(Error::dims("h_d length must equal m_t".to_string()));
        }
        if !self.h_r.is_empty() && self.h_r.len() != cfg.n_irs {
            return Err(Error::dims("h_r length must equal n_irs".to_string()));
        }
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() || !self.theta.is_finite() {
            return Err(Error::invalid("target parameters must be finite"));
        }
        Ok(())
    }

    pub fn has_cu_links(&self) -> bool {
        !self.h_d.is_empty() && !self.h_r.is_empty()
    }
}

/// Per-element IRS phases and amplification gains.
///
/// The induced reflecting matrix is `diag(a_1 e^{j phi_1}, ..., a_N e^{j phi_N})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectPattern {
    /// Phase shifts, normalized to (0, 2*pi].
    pub phases: Vec<f64>,
    /// Amplification gains, all 1 for passive architectures.
    pub gains: Vec<f64>,
}

/// Map any angle into the (0, 2*pi] convention used for element phases.
pub fn normalize_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r == 0.0 {
        TAU
    } else {
        r
    }
}

impl ReflectPattern {
    pub fn passive(phases: Vec<f64>) -> Self {
        let gains = vec![1.0; phases.len()];
        Self { phases: phases.into_iter().map(normalize_phase).collect(), gains }
    }

    pub fn active(phases: Vec<f64>, gains: Vec<f64>) -> Self {
        Self { phases: phases.into_iter().map(normalize_phase).collect(), gains }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.phases.len() != cfg.n_irs || self.gains.len() != cfg.n_irs {
            return Err(Error::dims(format!(
                "pattern has {} phases / {} gains, expected {}",
                self.phases.len(),
                self.gains.len(),
                cfg.n_irs
            )));
        }
        for &phi in &self.phases {
            if !(phi > 0.0 && phi <= TAU) {
                return Err(Error::invalid(format!("phase {phi} outside (0, 2*pi]")));
            }
        }
        match cfg.architecture {
            Architecture::FullyPassive | Architecture::SemiPassive => {
                if self.gains.iter().any(|&a| a != 1.0) {
                    return Err(Error::invalid("passive architectures require unit gains"));
                }
            }
            Architecture::Active => {
                if self.gains.iter().any(|&a| !(0.0..=cfg.a_max).contains(&a)) {
                    return Err(Error::invalid(format!(
                        "active gains must lie in [0, a_max={}]",
                        cfg.a_max
                    )));
                }
            }
        }
        Ok(())
    }

    /// Diagonal of the reflecting matrix, `v_n = a_n e^{j phi_n}`.
    pub fn diag(&self) -> CVec {
        CVec::from_iterator(
            self.phases.len(),
            self.phases
                .iter()
                .zip(&self.gains)
                .map(|(&phi, &a)| C64::from_polar(a, phi)),
        )
    }

    /// Dense reflecting matrix (diagonal); mainly for oracle tests.
    pub fn matrix(&self) -> CMat {
        CMat::from_diagonal(&self.diag())
    }
}

/// Hermitian PSD sample covariance of the BS transmit signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitCovariance {
    r: CMat,
}

impl TransmitCovariance {
    /// Wrap a matrix after checking Hermitian symmetry (1e-10), positive
    /// semidefiniteness (eigenvalues >= -1e-10) and the trace budget
    /// (`tr R <= p_bs + 1e-9`). Tolerances scale with the matrix magnitude.
    pub fn new(r: CMat, p_bs: f64) -> Result<Self> {
        if r.nrows() != r.ncols() {
            return Err(Error::dims("covariance must be square".to_string()));
        }
        let scale = r.norm().max(1.0);
        let herm_dev = (&r - r.adjoint()).norm();
        if herm_dev > 1e-10 * scale {
            return Err(Error::invalid(format!(
                "covariance not Hermitian: deviation {herm_dev:.3e}"
            )));
        }
        let sym = nalgebra::SymmetricEigen::new(r.clone());
        let min_eig = sym.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * scale {
            return Err(Error::invalid(format!(
                "covariance not PSD: min eigenvalue {min_eig:.3e}"
            )));
        }
        let tr = r.diagonal().iter().map(|z| z.re).sum::<f64>();
        if tr > p_bs + 1e-9 * p_bs.max(1.0) {
            return Err(Error::invalid(format!(
                "covariance trace {tr:.6e} exceeds power budget {p_bs:.6e}"
            )));
        }
        Ok(Self { r })
    }

    /// Rank-1 covariance `P * u u^H / ||u||^2` along the beam `u`.
    pub fn mrt(beam: &CVec, power: f64) -> Result<Self> {
        let n2 = beam.norm_squared();
        if !(n2 > 0.0) || !(power > 0.0) {
            return Err(Error::invalid("MRT requires a nonzero beam and positive power"));
        }
        let r = beam * beam.adjoint() * C64::new(power / n2, 0.0);
        Ok(Self { r })
    }

    /// Isotropic covariance `(P/M) I`.
    pub fn scaled_identity(m: usize, power: f64) -> Result<Self> {
        if m == 0 || !(power > 0.0) {
            return Err(Error::invalid("identity covariance requires m >= 1 and power > 0"));
        }
        Ok(Self { r: CMat::identity(m, m) * C64::new(power / m as f64, 0.0) })
    }

    /// Construct without validation; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(r: CMat) -> Self {
        Self { r }
    }

    pub fn matrix(&self) -> &CMat {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.r.diagonal().iter().map(|z| z.re).sum()
    }

    /// Transposed matrix; the CRB closed forms contract against `R^T`.
    pub fn transposed(&self) -> CMat {
        self.r.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// H1, the N x N IRS-target-IRS round trip seen by the fully-passive return path.
    IrsRoundTrip,
    /// H2, the M_r x N target-to-sensor response of the semi-passive/active surface.
    IrsToSensor,
}

/// Rank-1 point-target response matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetResponse {
    pub matrix: CMat,
    pub kind: ResponseKind,
}

/// ULA steering vector: entry n is `exp(j 2*pi*spacing*n*sin(theta))`.
pub fn steering_vector(count: usize, theta: f64, spacing: f64) -> Result<CVec> {
    if count < 1 {
        return Err(Error::invalid("steering vector needs count >= 1"));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::invalid(format!("steering spacing must be > 0, got {spacing}")));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("steering angle must be finite"));
    }
    let k = TAU * spacing * theta.sin();
    Ok(CVec::from_iterator(
        count,
        (0..count).map(|n| C64::from_polar(1.0, k * n as f64)),
    ))
}

/// Derivative of [`steering_vector`] with respect to theta:
/// entry n is `j 2*pi*spacing*n*cos(theta) * exp(j 2*pi*spacing*n*sin(theta))`.
pub fn steering_derivative(count: usize, theta: f64, spacing: f64) -> Result<CVec> {
    let a = steering_vector(count, theta, spacing)?;
    let c = TAU * spacing * theta.cos();
    Ok(CVec::from_iterator(
        count,
        a.iter()
            .enumerate()
            .map(|(n, &an)| C64::new(0.0, c * n as f64) * an),
    ))
}

/// Path loss `L(d)`; thin wrapper kept as a free function to mirror usage.
pub fn path_loss(model: &PathLossModel, d: f64) -> Result<f64> {
    model.gain(d)
}

/// LoS BS-IRS channels plus the steering vectors that generate them.
#[derive(Debug, Clone)]
pub struct LosChannels {
    /// BS -> IRS, `sqrt(L(d1)) c d^T`.
    pub g_t: CMat,
    /// IRS -> BS, `sqrt(L(d1)) e c^T`.
    pub g_r: CMat,
    /// IRS steering toward the BS (length N).
    pub c: CVec,
    /// BS transmit steering toward the IRS (length M_t).
    pub d: CVec,
    /// BS receive steering toward the IRS (length M_r).
    pub e: CVec,
}

impl LosChannels {
    pub fn channel_set(&self, theta: f64, alpha: C64) -> ChannelSet {
        ChannelSet {
            g_t: self.g_t.clone(),
            g_r: self.g_r.clone(),
            h_d: CVec::zeros(0),
            h_r: CVec::zeros(0),
            theta,
            alpha,
        }
    }
}

/// Rank-1 LoS channels between the BS and the IRS from the configured geometry.
pub fn los_channels(cfg: &SystemConfig) -> Result<LosChannels> {
    cfg.validate()?;
    let c = steering_vector(cfg.n_irs, cfg.geometry.irs_angle, HALF_WAVELENGTH)?;
    let d = steering_vector(cfg.m_t, cfg.geometry.bs_angle, HALF_WAVELENGTH)?;
    let e = steering_vector(cfg.m_r, cfg.geometry.bs_angle, HALF_WAVELENGTH)?;
    let amp = C64::new(cfg.bs_irs_gain()?.sqrt(), 0.0);
    let g_t = (&c * d.transpose()) * amp;
    let g_r = (&e * c.transpose()) * amp;
    Ok(LosChannels { g_t, g_r, c, d, e })
}

/// Matrix with i.i.d. standard circularly-symmetric complex Gaussian entries
/// (real and imaginary parts i.i.d. Normal(0, 1/2)).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Rician fading draw around a LoS component.
///
/// Returns `sqrt(scale) * (sqrt(K/(K+1)) los_hat + sqrt(1/(K+1)) W)` where
/// `los_hat` is `los` rescaled to squared Frobenius norm = element count and
/// `W` is i.i.d. CN(0,1), so the expected squared Frobenius norm is
/// `scale * element count`.
pub fn rician_channel<R: Rng + ?Sized>(
    rng: &mut R,
    k_factor: f64,
    los: &CMat,
    scale: f64,
) -> Result<CMat> {
    if !(k_factor >= 0.0) || !k_factor.is_finite() {
        return Err(Error::invalid(format!("Rician K must be >= 0, got {k_factor}")));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid(format!("Rician scale must be > 0, got {scale}")));
    }
    let (rows, cols) = (los.nrows(), los.ncols());
    let count = (rows * cols) as f64;
    let los_norm2 = los.norm_squared();
    if !(los_norm2 > 0.0) {
        return Err(Error::invalid("Rician LoS component must be nonzero"));
    }
    let los_hat = los * C64::new((count / los_norm2).sqrt(), 0.0);
    let w = complex_gaussian(rng, rows, cols);
    let c_los = (k_factor / (k_factor + 1.0)).sqrt();
    let c_nlos = (1.0 / (k_factor + 1.0)).sqrt();
    Ok((los_hat * C64::new(c_los, 0.0) + w * C64::new(c_nlos, 0.0)) * C64::new(scale.sqrt(), 0.0))
}

/// Point-target response matrix for the configured architecture:
/// `H1 = alpha a(theta) a^T(theta)` (N x N) for the fully-passive surface,
/// `H2 = alpha b(theta) a^T(theta)` (M_r x N) otherwise.
pub fn target_response(cfg: &SystemConfig, theta: f64, alpha: C64) -> Result<TargetResponse> {
    cfg.validate()?;
    let a = steering_vector(cfg.n_irs, theta, HALF_WAVELENGTH)?;
    match cfg.architecture {
        Architecture::FullyPassive => {
            let m = (&a * a.transpose()) * alpha;
            Ok(TargetResponse { matrix: m, kind: ResponseKind::IrsRoundTrip })
        }
        Architecture::SemiPassive | Architecture::Active => {
            let b = steering_vector(cfg.m_r, theta, HALF_WAVELENGTH)?;
            let m = (&b * a.transpose()) * alpha;
            Ok(TargetResponse { matrix: m, kind: ResponseKind::IrsToSensor })
        }
    }
}

/// Deterministic `M_t x T` transmit block whose sample covariance equals `r`
/// exactly: columns `x(t) = U sqrt(Lambda) f(t)` with DFT phase columns
/// `f_k(t) = exp(j 2 pi k t / T)`, which are orthogonal over `t` whenever
/// `T` is at least the number of nonzero eigenvalues.
pub fn realize_block(r: &TransmitCovariance, t: usize) -> Result<CMat> {
    if t < 1 {
        return Err(Error::invalid("block length must be >= 1"));
    }
    let m = r.dim();
    let sym = nalgebra::SymmetricEigen::new(r.matrix().clone());
    let scale = sym.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mut modes: Vec<(f64, usize)> = sym
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-14 * scale.max(1e-300))
        .map(|(i, &l)| (l, i))
        .collect();
    modes.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    if modes.len() > t {
        return Err(Error::invalid(format!(
            "cannot realize rank-{} covariance with {} symbols",
            modes.len(),
            t
        )));
    }
    let mut x = CMat::zeros(m, t);
    for (k, &(lam, idx)) in modes.iter().enumerate() {
        let amp = lam.max(0.0).sqrt();
        let col = sym.eigenvectors.column(idx);
        for tt in 0..t {
            let phase = TAU * (k as f64) * (tt as f64) / t as f64;
            let f = C64::from_polar(amp, phase);
            for i in 0..m {
                x[(i, tt)] += col[i] * f;
            }
        }
    }
    Ok(x)
}

/// Angle grid over the visible region (-pi/2, pi/2), endpoints excluded.
pub fn angle_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (1..=n)
        .map(|i| -PI / 2.0 + PI * i as f64 / (n as f64 + 1.0))
        .collect()
}
