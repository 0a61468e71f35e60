//! Joint transmit-covariance and reflect-pattern optimization: exact closed
//! forms for detection-SNR maximization under LoS channels, and an
//! alternating projected-gradient loop for CRB minimization.
//!
//! The CRB minimizer alternates two monotone subproblems. The transmit step
//! maximizes the Schur-complement denominator `D(R)` — concave in `R` — by
//! projected gradient ascent on the trace-constrained PSD cone (projection:
//! eigendecompose, clip negative eigenvalues, rescale the trace). The reflect
//! step ascends `D` over the element phases (and gains for the active
//! architecture, respecting the surface power budget), using the fact that
//! every scalar in `D` is a quadratic form in the reflection coefficients
//! `v_n = a_n e^{j phi_n}`. Steps are accepted only when they improve the
//! objective while staying feasible, so the recorded objective trace is
//! monotone by construction.

use crate::cascade::{cascade_at, CrbTerms, SensePath};
use crate::detection::{pd_closed_form, DetectorParams};
use crate::error::{Error, Result};
use crate::estimation::crb_from_terms;
use crate::model::{
    normalize_phase, steering_derivative, steering_vector, Architecture, CMat, CVec, ChannelSet,
    LosChannels, ReflectPattern, SystemConfig, TransmitCovariance, C64, HALF_WAVELENGTH,
};
use crate::snr::{active_reflect_power, sensing_snr};

/// Outcome of a beamforming design, with the per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub r: TransmitCovariance,
    pub pattern: ReflectPattern,
    /// Achieved metric: sensing SNR (linear) for detection designs, CRB
    /// (rad^2) for estimation designs.
    pub objective: f64,
    /// Objective after each outer iteration (index 0 = initial point).
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Largest relative constraint violation observed across all accepted
    /// iterates (power budgets, PSD, gain bounds).
    pub worst_violation: f64,
}

/// Element phases that align the cascade `c -> a(theta)` coherently:
/// `phi_n = -(arg c_n + arg a_n(theta))`.
pub fn aligned_phases(c: &CVec, theta: f64) -> Result<Vec<f64>> {
    let a = steering_vector(c.len(), theta, HALF_WAVELENGTH)?;
    Ok((0..c.len()).map(|n| -(c[n].arg() + a[n].arg())).collect())
}

/// Closed-form joint design maximizing detection probability under LoS
/// BS-IRS channels.
///
/// Passive architectures: MRT covariance `P d^* d^T / ||d||^2` at full power
/// and per-element phase conjugation, achieving `|c^T Phi a(theta)| = N`.
/// Active: the same structure at transmit power
/// `P_x = min(P_BS, (P_IRS/(N a0^2) - sigma_z2) / (L(d1) M_t))`, with the
/// common gain `a0` picked by a dense one-dimensional search (512 log-spaced
/// points, smallest maximizer wins) over the closed-form detection
/// probability at the target false-alarm rate.
pub fn optimal_los_detection(
    cfg: &SystemConfig,
    los: &LosChannels,
    theta: f64,
    alpha: C64,
    pfa: f64,
) -> Result<BeamformingSolution> {
    cfg.validate()?;
    let phases = aligned_phases(&los.c, theta)?;
    let ch = los.channel_set(theta, alpha);
    match cfg.architecture {
        Architecture::FullyPassive | Architecture::SemiPassive => {
            let pattern = ReflectPattern::passive(phases);
            let r = TransmitCovariance::mrt(&los.d.conjugate(), cfg.p_bs)?;
            let snr = sensing_snr(cfg, &ch, &pattern, &r)?;
            Ok(BeamformingSolution {
                r,
                pattern,
                objective: snr,
                trace: vec![snr],
                converged: true,
                worst_violation: 0.0,
            })
        }
        Architecture::Active => {
            let l1 = cfg.bs_irs_gain()?;
            let n = cfg.n_irs as f64;
            let lo = (cfg.a_max * 1e-3).min(1.0);
            let steps = 512;
            let log_lo = lo.ln();
            let log_hi = cfg.a_max.ln();
            let mut best: Option<(f64, f64, f64)> = None; // (pd, a0, p_x)
            for k in 0..steps {
                let a0 = (log_lo + (log_hi - log_lo) * k as f64 / (steps - 1) as f64)
                    .exp()
                    .min(cfg.a_max);
                let p_x_budget =
                    (cfg.p_irs / (n * a0 * a0) - cfg.sigma_z2) / (l1 * cfg.m_t as f64);
                let p_x = p_x_budget.min(cfg.p_bs);
                if p_x > 0.0 {
                    let pattern = ReflectPattern::active(phases.clone(), vec![a0; cfg.n_irs]);
                    let r = TransmitCovariance::mrt(&los.d.conjugate(), p_x)?;
                    let params = DetectorParams::from_scenario(cfg, &ch, &pattern, &r)?;
                    let pd = pd_closed_form(cfg, &params, pfa)?.pd;
                    // strictly-greater keeps the smallest maximizer
                    if best.map_or(true, |(b, _, _)| pd > b) {
                        best = Some((pd, a0, p_x));
                    }
                }
            }
            let (_, a0, p_x) = best.ok_or_else(|| {
                Error::Infeasible(format!(
                    "active surface budget P_IRS={} cannot radiate for any gain in ({lo}, {}]",
                    cfg.p_irs, cfg.a_max
                ))
            })?;
            let pattern = ReflectPattern::active(phases, vec![a0; cfg.n_irs]);
            let r = TransmitCovariance::mrt(&los.d.conjugate(), p_x)?;
            let snr = sensing_snr(cfg, &ch, &pattern, &r)?;
            let power = active_reflect_power(&ch, &pattern, &r, cfg.sigma_z2)?;
            let violation = ((power - cfg.p_irs) / cfg.p_irs).max(0.0);
            Ok(BeamformingSolution {
                r,
                pattern,
                objective: snr,
                trace: vec![snr],
                converged: true,
                worst_violation: violation,
            })
        }
    }
}

/// Default starting point for the CRB minimizer: phases aligning the cascade
/// through the dominant transmit direction of `G_t`, and a half-MRT /
/// half-isotropic covariance at full power. A pure MRT start sits exactly on
/// the rank-1 degeneracy of the CRB under near-LoS channels, so the blend is
/// used instead.
pub fn default_crb_init(
    cfg: &SystemConfig,
    ch: &ChannelSet,
) -> Result<(TransmitCovariance, ReflectPattern)> {
    let gram = ch.g_t.adjoint() * &ch.g_t;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let (mut imax, mut lmax) = (0usize, f64::NEG_INFINITY);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > lmax {
            lmax = l;
            imax = i;
        }
    }
    let u1 = eig.eigenvectors.column(imax).into_owned();
    let beam_path = &ch.g_t * &u1;
    let a = steering_vector(cfg.n_irs, ch.theta, HALF_WAVELENGTH)?;
    let phases: Vec<f64> =
        (0..cfg.n_irs).map(|n| -(a[n].arg() + beam_path[n].arg())).collect();
    let mut pattern = match cfg.architecture {
        Architecture::Active => ReflectPattern::active(phases, vec![1.0; cfg.n_irs]),
        _ => ReflectPattern::passive(phases),
    };

    let cas = cascade_at(cfg, ch, &pattern, ch.theta)?;
    let mrt = TransmitCovariance::mrt(&cas.p_t.conjugate(), cfg.p_bs)?;
    let blended = mrt.matrix() * C64::new(0.5, 0.0)
        + CMat::identity(cfg.m_t, cfg.m_t) * C64::new(0.5 * cfg.p_bs / cfg.m_t as f64, 0.0);
    let r = TransmitCovariance::from_matrix_unchecked(blended);

    if cfg.architecture == Architecture::Active {
        // scale the uniform gain so the surface budget is met with margin
        let power = active_reflect_power(ch, &pattern, &r, cfg.sigma_z2)?;
        let s = (cfg.p_irs / power).sqrt().min(cfg.a_max) * 0.999;
        pattern = ReflectPattern::active(pattern.phases.clone(), vec![s; cfg.n_irs]);
    }
    Ok((r, pattern))
}

/// Split-aperture starting point: the lower half of the elements aligns the
/// steering-weighted cascade onto the dominant transmit direction of `G_t`,
/// the upper half (where the derivative weights are largest) onto the
/// second direction. This seeds the coherent derivative component the
/// aligned start lacks — under near-rank-1 channels the aligned profile
/// leaves the cascade derivative parallel to the cascade itself, which is a
/// deep local valley for the CRB objective.
pub fn split_aperture_init(
    cfg: &SystemConfig,
    ch: &ChannelSet,
) -> Result<(TransmitCovariance, ReflectPattern)> {
    if cfg.m_t < 2 {
        return default_crb_init(cfg, ch);
    }
    let gram = ch.g_t.adjoint() * &ch.g_t;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..cfg.m_t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let u1 = eig.eigenvectors.column(order[0]).into_owned();
    let u2 = eig.eigenvectors.column(order[1]).into_owned();
    let t1 = &ch.g_t * &u1;
    let t2 = &ch.g_t * &u2;
    let a = steering_vector(cfg.n_irs, ch.theta, HALF_WAVELENGTH)?;
    let phases: Vec<f64> = (0..cfg.n_irs)
        .map(|n| {
            if n < cfg.n_irs / 2 {
                -(a[n].arg() + t1[n].arg())
            } else {
                -(a[n].arg() + t2[n].arg())
            }
        })
        .collect();
    let mut pattern = match cfg.architecture {
        Architecture::Active => ReflectPattern::active(phases, vec![1.0; cfg.n_irs]),
        _ => ReflectPattern::passive(phases),
    };
    let rmat = (&u1 * u1.adjoint() + &u2 * u2.adjoint()) * C64::new(0.4 * cfg.p_bs, 0.0)
        + CMat::identity(cfg.m_t, cfg.m_t) * C64::new(0.2 * cfg.p_bs / cfg.m_t as f64, 0.0);
    let r = TransmitCovariance::from_matrix_unchecked(rmat);
    if cfg.architecture == Architecture::Active {
        let power = active_reflect_power(ch, &pattern, &r, cfg.sigma_z2)?;
        let s = (cfg.p_irs / power).sqrt().min(cfg.a_max) * 0.999;
        pattern = ReflectPattern::active(pattern.phases.clone(), vec![s; cfg.n_irs]);
    }
    Ok((r, pattern))
}

/// Audit of one iterate against every constraint, as relative violations.
fn constraint_violation(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    r: &CMat,
    pat: &ReflectPattern,
) -> f64 {
    let tr: f64 = r.diagonal().iter().map(|z| z.re).sum();
    let mut v = (tr - cfg.p_bs) / cfg.p_bs;
    let eig = nalgebra::SymmetricEigen::new(r.clone());
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    v = v.max(-min_eig / tr.max(1e-300));
    for &g in &pat.gains {
        v = v.max(-g); // g >= 0
        v = v.max((g - cfg.a_max) / cfg.a_max);
    }
    if cfg.architecture == Architecture::Active {
        let rc = TransmitCovariance::from_matrix_unchecked(r.clone());
        if let Ok(p) = active_reflect_power(ch, pat, &rc, cfg.sigma_z2) {
            v = v.max((p - cfg.p_irs) / cfg.p_irs);
        }
    }
    v.max(0.0)
}

/// Alternating CRB minimization over the transmit covariance and the
/// reflect pattern. Stops once the relative CRB improvement per outer
/// iteration stays below `tol` for three consecutive iterations, or after
/// `max_iters` iterations. The objective trace is non-increasing by
/// construction.
///
/// With `init = None` the solver runs from both the aligned and the
/// split-aperture starting points and returns the better run (each run's
/// trace is its own); pass an explicit `init` for warm-start semantics.
pub fn ao_crb_min(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    init: Option<&BeamformingSolution>,
    tol: f64,
    max_iters: usize,
) -> Result<BeamformingSolution> {
    cfg.validate()?;
    ch.validate(cfg)?;
    match init {
        Some(s) => {
            s.pattern.validate(cfg).map_err(|e| {
                Error::InvalidArgument(format!("infeasible init pattern: {e}"))
            })?;
            if s.r.trace() > cfg.p_bs * (1.0 + 1e-9) {
                return Err(Error::InvalidArgument("infeasible init covariance".into()));
            }
            ao_single(cfg, ch, (s.r.clone(), s.pattern.clone()), tol, max_iters)
        }
        None => {
            let mut best = ao_single(cfg, ch, default_crb_init(cfg, ch)?, tol, max_iters)?;
            let mut starts = vec![split_aperture_init(cfg, ch)?];
            if cfg.architecture == Architecture::FullyPassive {
                starts.push(split_aperture_rx_init(cfg, ch)?);
            }
            for start in starts {
                let run = ao_single(cfg, ch, start, tol, max_iters)?;
                if run.objective < best.objective {
                    best = run;
                }
            }
            Ok(best)
        }
    }
}

/// Receive-side split start for the fully-passive architecture: halves of
/// the aperture align the cascade onto the two dominant output directions of
/// `G_r`, seeding a coherent derivative component on the return path.
fn split_aperture_rx_init(
    cfg: &SystemConfig,
    ch: &ChannelSet,
) -> Result<(TransmitCovariance, ReflectPattern)> {
    if cfg.m_r < 2 {
        return default_crb_init(cfg, ch);
    }
    let gram = &ch.g_r * ch.g_r.adjoint(); // M_r x M_r
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..cfg.m_r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let w1 = eig.eigenvectors.column(order[0]).into_owned();
    let w2 = eig.eigenvectors.column(order[1]).into_owned();
    let t1 = ch.g_r.adjoint() * &w1; // t_n = (G_r^H w)_n
    let t2 = ch.g_r.adjoint() * &w2;
    let a = steering_vector(cfg.n_irs, ch.theta, HALF_WAVELENGTH)?;
    let phases: Vec<f64> = (0..cfg.n_irs)
        .map(|n| {
            // align w^H G_r diag(a) v coherently: phi_n = -arg(a_n) + arg(t_n)
            if n < cfg.n_irs / 2 {
                -a[n].arg() + t1[n].arg()
            } else {
                -a[n].arg() + t2[n].arg()
            }
        })
        .collect();
    let pattern = ReflectPattern::passive(phases);
    let cas = cascade_at(cfg, ch, &pattern, ch.theta)?;
    let mrt = TransmitCovariance::mrt(&cas.p_t.conjugate(), cfg.p_bs)?;
    let blended = mrt.matrix() * C64::new(0.5, 0.0)
        + CMat::identity(cfg.m_t, cfg.m_t) * C64::new(0.5 * cfg.p_bs / cfg.m_t as f64, 0.0);
    Ok((TransmitCovariance::from_matrix_unchecked(blended), pattern))
}

fn ao_single(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    start: (TransmitCovariance, ReflectPattern),
    tol: f64,
    max_iters: usize,
) -> Result<BeamformingSolution> {
    let (mut r, mut pattern) = start;
    let eval_crb = |r: &TransmitCovariance, pat: &ReflectPattern| -> Result<f64> {
        let cas = cascade_at(cfg, ch, pat, ch.theta)?;
        crb_from_terms(cfg, ch.alpha, &CrbTerms::from_cascade(&cas, r))
    };

    let mut crb = eval_crb(&r, &pattern)?;
    let mut trace = vec![crb];
    let mut worst = constraint_violation(cfg, ch, r.matrix(), &pattern);
    let mut converged = false;
    let mut quiet = 0usize;

    for _ in 0..max_iters {
        let mut rm = r.matrix().clone();
        transmit_step(cfg, ch, &pattern, &mut rm)?;
        r = TransmitCovariance::from_matrix_unchecked(rm);
        reflect_step(cfg, ch, &r, &mut pattern)?;

        let new_crb = eval_crb(&r, &pattern)?;
        worst = worst.max(constraint_violation(cfg, ch, r.matrix(), &pattern));
        trace.push(new_crb);
        let improvement = (crb - new_crb) / crb.abs().max(1e-300);
        crb = new_crb.min(crb);
        if improvement >= 0.0 && improvement < tol {
            quiet += 1;
            if quiet >= 3 {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    Ok(BeamformingSolution {
        r,
        pattern,
        objective: crb,
        trace,
        converged,
        worst_violation: worst,
    })
}

/// `tr(C R)` for the gradient bookkeeping.
fn trace_prod(c: &CMat, r: &CMat) -> C64 {
    let n = c.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += c[(i, j)] * r[(j, i)];
        }
    }
    acc
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Project onto {R PSD, tr R = budget}: eigendecompose, clip, rescale.
fn project_psd_trace(m: &CMat, budget: f64) -> CMat {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let dim = m.nrows();
    if total <= 0.0 {
        return CMat::identity(dim, dim) * C64::new(budget / dim as f64, 0.0);
    }
    let s = budget / total;
    let mut out = CMat::zeros(dim, dim);
    for (i, &l) in clipped.iter().enumerate() {
        if l > 0.0 {
            let col = eig.eigenvectors.column(i);
            let scaled = l * s;
            out += (col * col.adjoint()) * C64::new(scaled, 0.0);
        }
    }
    out
}

/// One monotone projected-gradient pass over the transmit covariance.
///
/// `D(R) = A t1 + aa (t2 - |t3|^2 / t1)` with `t_i = tr(C_i R)`; the
/// gradient on the Hermitian cone is
/// `(A + aa |t3|^2/t1^2) C1 + aa C2 - (2 aa / t1) Herm(t3 C3^H)`.
fn transmit_step(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &mut CMat,
) -> Result<()> {
    let cas = cascade_at(cfg, ch, pat, ch.theta)?;
    let (a_const, aa) = match &cas.path {
        SensePath::Monostatic { p_r, p_r_dot } => {
            let a1 = p_r.norm_squared();
            let a3 = p_r_dot.dotc(p_r);
            (p_r_dot.norm_squared() - a3.norm_sqr() / a1, a1)
        }
        SensePath::Sensor { b, b_dot } => {
            let a1 = b.norm_squared();
            let a3 = b_dot.dotc(b);
            (b_dot.norm_squared() - a3.norm_sqr() / a1, a1)
        }
    };
    let c1 = cas.p_t.conjugate() * cas.p_t.transpose();
    let c2 = cas.p_t_dot.conjugate() * cas.p_t_dot.transpose();
    let c3 = cas.p_t.conjugate() * cas.p_t_dot.transpose();

    let eval = |rm: &CMat| -> f64 {
        let t1 = trace_prod(&c1, rm).re;
        if t1 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t2 = trace_prod(&c2, rm).re;
        let t3 = trace_prod(&c3, rm);
        a_const * t1 + aa * (t2 - t3.norm_sqr() / t1)
    };

    let idle_power = if cfg.architecture == Architecture::Active {
        cfg.sigma_z2 * pat.diag().iter().map(|z| z.norm_sqr()).sum::<f64>()
    } else {
        0.0
    };
    let project = |rm: &CMat| -> CMat {
        let mut p = project_psd_trace(rm, cfg.p_bs);
        if cfg.architecture == Architecture::Active {
            let rc = TransmitCovariance::from_matrix_unchecked(p.clone());
            if let Ok(power) = active_reflect_power(ch, pat, &rc, cfg.sigma_z2) {
                let forwarded = power - idle_power;
                let headroom = cfg.p_irs - idle_power;
                if forwarded > headroom && forwarded > 0.0 {
                    if headroom <= 0.0 {
                        p *= C64::new(1e-12, 0.0);
                    } else {
                        p *= C64::new(headroom / forwarded, 0.0);
                    }
                }
            }
        }
        p
    };

    *r = project(r);
    let mut d = eval(r);
    let mut step = cfg.p_bs / (1.0 + d.abs() / cfg.p_bs);
    for _ in 0..150 {
        let t1 = trace_prod(&c1, r).re;
        if t1 <= 0.0 {
            break;
        }
        let t3 = trace_prod(&c3, r);
        let grad = &c1 * C64::new(a_const + aa * t3.norm_sqr() / (t1 * t1), 0.0)
            + &c2 * C64::new(aa, 0.0)
            - hermitian_part(&(&c3.adjoint() * t3)) * C64::new(2.0 * aa / t1, 0.0);
        let gn = grad.norm();
        if gn <= 0.0 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand = project(&(&*r + &grad * C64::new(step / gn * cfg.p_bs, 0.0)));
            let dc = eval(&cand);
            if dc > d * (1.0 + 1e-14) + f64::MIN_POSITIVE {
                *r = cand;
                let gain = (dc - d) / d.abs().max(1e-300);
                d = dc;
                improved = true;
                step *= 2.0;
                if gain < 1e-9 {
                    return Ok(());
                }
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(())
}

/// Quadratic-form bookkeeping for the reflect-step gradient: for
/// `q(v) = v^H Q v`, `dq/dphi_n = j (f_n - e_n)` and
/// `dq/da_n = u_n^* (Qv)_n + u_n conj((Q^H v)_n)` with `u_n = e^{j phi_n}`,
/// `e_n = conj(v_n) (Qv)_n`, `f_n = v_n conj((Q^H v)_n)`.
struct QuadEval {
    value: C64,
    e: CVec,
    f: CVec,
    qv: CVec,
    qhv: CVec,
}

impl QuadEval {
    fn dphi(&self, n: usize) -> C64 {
        C64::i() * (self.f[n] - self.e[n])
    }

    fn dgain(&self, n: usize, u: C64) -> C64 {
        u.conj() * self.qv[n] + u * self.qhv[n].conj()
    }
}

/// Quadratic form kept factored as `q(v) = (X v)^H W (Y v)` so that
/// evaluation and gradients cost O(N max(M)) instead of O(N^2); `W = None`
/// means identity. `Q = X^H W Y` never needs to be formed explicitly.
struct QuadFactor {
    x: CMat,
    y: CMat,
    w: Option<CMat>,
    hermitian: bool,
}

impl QuadFactor {
    fn eval(&self, v: &CVec) -> QuadEval {
        let yv = &self.y * v;
        let wyv = match &self.w {
            Some(w) => w * &yv,
            None => yv,
        };
        let qv = self.x.adjoint() * &wyv;
        let qhv = if self.hermitian {
            qv.clone()
        } else {
            let xv = &self.x * v;
            let whxv = match &self.w {
                Some(w) => w.adjoint() * &xv,
                None => xv,
            };
            self.y.adjoint() * &whxv
        };
        let value = v.dotc(&qv);
        let e = CVec::from_iterator(v.len(), (0..v.len()).map(|n| v[n].conj() * qv[n]));
        let f = CVec::from_iterator(v.len(), (0..v.len()).map(|n| v[n] * qhv[n].conj()));
        QuadEval { value, e, f, qv, qhv }
    }
}

struct ReflectQuadratics {
    qb1: QuadFactor,
    qb2: QuadFactor,
    qb3: QuadFactor,
    rx: Option<(QuadFactor, QuadFactor, QuadFactor)>, // fully-passive path
    cb: f64,                                          // sensor-path constants otherwise
    ca1: f64,
}

fn reflect_quadratics(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    r: &TransmitCovariance,
) -> Result<ReflectQuadratics> {
    let a = steering_vector(cfg.n_irs, ch.theta, HALF_WAVELENGTH)?;
    let a_dot = steering_derivative(cfg.n_irs, ch.theta, HALF_WAVELENGTH)?;
    let gt_t = ch.g_t.transpose(); // M_t x N
    let scale_cols = |m: &CMat, w: &CVec| -> CMat {
        let mut out = m.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            for x in col.iter_mut() {
                *x *= w[j];
            }
        }
        out
    };
    let p_t = scale_cols(&gt_t, &a); // G_t^T diag(a)
    let p_td = scale_cols(&gt_t, &a_dot);
    let rt = r.transposed();
    let qb1 = QuadFactor { x: p_t.clone(), y: p_t.clone(), w: Some(rt.clone()), hermitian: true };
    let qb2 = QuadFactor { x: p_td.clone(), y: p_td.clone(), w: Some(rt.clone()), hermitian: true };
    let qb3 = QuadFactor { x: p_t, y: p_td, w: Some(rt), hermitian: false };
    match cfg.architecture {
        Architecture::FullyPassive => {
            let w = scale_cols(&ch.g_r, &a);
            let wd = scale_cols(&ch.g_r, &a_dot);
            let qa1 = QuadFactor { x: w.clone(), y: w.clone(), w: None, hermitian: true };
            let qa2 = QuadFactor { x: wd.clone(), y: wd.clone(), w: None, hermitian: true };
            let qa3 = QuadFactor { x: wd, y: w, w: None, hermitian: false };
            Ok(ReflectQuadratics { qb1, qb2, qb3, rx: Some((qa1, qa2, qa3)), cb: 0.0, ca1: 0.0 })
        }
        _ => {
            let b = steering_vector(cfg.m_r, ch.theta, HALF_WAVELENGTH)?;
            let b_dot = steering_derivative(cfg.m_r, ch.theta, HALF_WAVELENGTH)?;
            let a1 = b.norm_squared();
            let a3 = b_dot.dotc(&b);
            Ok(ReflectQuadratics {
                qb1,
                qb2,
                qb3,
                rx: None,
                cb: b_dot.norm_squared() - a3.norm_sqr() / a1,
                ca1: a1,
            })
        }
    }
}

/// Objective and gradient of `D` with respect to phases (and gains).
fn reflect_objective(
    quads: &ReflectQuadratics,
    v: &CVec,
    phases: &[f64],
    want_gain_grad: bool,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = v.len();
    let b1 = quads.qb1.eval(v);
    let b2 = quads.qb2.eval(v);
    let b3 = quads.qb3.eval(v);
    let t_b1 = b1.value.re;
    if t_b1 <= 0.0 {
        return (f64::NEG_INFINITY, vec![0.0; n], vec![0.0; n]);
    }
    let big_b = b2.value.re - b3.value.norm_sqr() / t_b1;

    let mut d;
    let mut dphi = vec![0.0; n];
    let mut dgain = vec![0.0; n];
    let units: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();

    // dB = db2 - (2 Re(conj(b3) db3) t_b1 - |b3|^2 db1) / t_b1^2
    let d_big_b = |db1: f64, db2: f64, db3: C64| -> f64 {
        db2 - (2.0 * (b3.value.conj() * db3).re * t_b1 - b3.value.norm_sqr() * db1)
            / (t_b1 * t_b1)
    };

    match &quads.rx {
        Some((qa1, qa2, qa3)) => {
            let a1 = qa1.eval(v);
            let a2 = qa2.eval(v);
            let a3 = qa3.eval(v);
            let t_a1 = a1.value.re;
            if t_a1 <= 0.0 {
                return (f64::NEG_INFINITY, dphi, dgain);
            }
            let big_a = a2.value.re - a3.value.norm_sqr() / t_a1;
            d = t_b1 * big_a + t_a1 * big_b;
            let d_big_a = |da1: f64, da2: f64, da3: C64| -> f64 {
                da2 - (2.0 * (a3.value.conj() * da3).re * t_a1 - a3.value.norm_sqr() * da1)
                    / (t_a1 * t_a1)
            };
            for i in 0..n {
                let db1 = b1.dphi(i).re;
                let db2 = b2.dphi(i).re;
                let db3 = b3.dphi(i);
                let da1 = a1.dphi(i).re;
                let da2 = a2.dphi(i).re;
                let da3 = a3.dphi(i);
                dphi[i] = db1 * big_a
                    + t_b1 * d_big_a(da1, da2, da3)
                    + da1 * big_b
                    + t_a1 * d_big_b(db1, db2, db3);
                if want_gain_grad {
                    let db1 = b1.dgain(i, units[i]).re;
                    let db2 = b2.dgain(i, units[i]).re;
                    let db3 = b3.dgain(i, units[i]);
                    let da1 = a1.dgain(i, units[i]).re;
                    let da2 = a2.dgain(i, units[i]).re;
                    let da3 = a3.dgain(i, units[i]);
                    dgain[i] = db1 * big_a
                        + t_b1 * d_big_a(da1, da2, da3)
                        + da1 * big_b
                        + t_a1 * d_big_b(db1, db2, db3);
                }
            }
        }
        None => {
            d = t_b1 * quads.cb + quads.ca1 * big_b;
            for i in 0..n {
                let db1 = b1.dphi(i).re;
                let db2 = b2.dphi(i).re;
                let db3 = b3.dphi(i);
                dphi[i] = quads.cb * db1 + quads.ca1 * d_big_b(db1, db2, db3);
                if want_gain_grad {
                    let db1 = b1.dgain(i, units[i]).re;
                    let db2 = b2.dgain(i, units[i]).re;
                    let db3 = b3.dgain(i, units[i]);
                    dgain[i] = quads.cb * db1 + quads.ca1 * d_big_b(db1, db2, db3);
                }
            }
        }
    }
    if !d.is_finite() {
        d = f64::NEG_INFINITY;
    }
    (d, dphi, dgain)
}

/// One monotone projected-gradient pass over the reflect pattern.
fn reflect_step(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    r: &TransmitCovariance,
    pat: &mut ReflectPattern,
) -> Result<()> {
    let quads = reflect_quadratics(cfg, ch, r)?;
    let is_active = cfg.architecture == Architecture::Active;

    // per-element forwarded power load for the active projection
    let load: Option<Vec<f64>> = if is_active {
        let rg = r.matrix() * ch.g_t.adjoint();
        Some(
            (0..cfg.n_irs)
                .map(|nn| {
                    let row = ch.g_t.row(nn);
                    let col = rg.column(nn);
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..row.len() {
                        acc += row[k] * col[k];
                    }
                    acc.re + cfg.sigma_z2
                })
                .collect(),
        )
    } else {
        None
    };
    let project_gains = |gains: &mut Vec<f64>| {
        if let Some(load) = &load {
            for g in gains.iter_mut() {
                *g = g.clamp(0.0, cfg.a_max);
            }
            let power: f64 =
                gains.iter().zip(load).map(|(&g, &l)| g * g * l).sum();
            if power > cfg.p_irs {
                let s = (cfg.p_irs / power).sqrt() * (1.0 - 1e-12);
                for g in gains.iter_mut() {
                    *g *= s;
                }
            }
        }
    };

    let mut phases = pat.phases.clone();
    let mut gains = pat.gains.clone();
    project_gains(&mut gains);
    let build_v = |ph: &[f64], ga: &[f64]| -> CVec {
        CVec::from_iterator(
            ph.len(),
            ph.iter().zip(ga).map(|(&p, &g)| C64::from_polar(g, p)),
        )
    };

    let (mut d, _, _) = reflect_objective(&quads, &build_v(&phases, &gains), &phases, false);
    let mut step = 1.0;
    for _ in 0..300 {
        let v = build_v(&phases, &gains);
        let (_, dphi, dgain) = reflect_objective(&quads, &v, &phases, is_active);
        let gnorm = dphi.iter().map(|x| x * x).sum::<f64>().sqrt()
            + dgain.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm <= 0.0 || !gnorm.is_finite() {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand_ph: Vec<f64> = phases
                .iter()
                .zip(&dphi)
                .map(|(&p, &g)| p + step / gnorm * g)
                .collect();
            let mut cand_ga: Vec<f64> = gains
                .iter()
                .zip(&dgain)
                .map(|(&a, &g)| a + step / gnorm * g)
                .collect();
            project_gains(&mut cand_ga);
            let (dc, _, _) =
                reflect_objective(&quads, &build_v(&cand_ph, &cand_ga), &cand_ph, false);
            if dc > d * (1.0 + 1e-14) + f64::MIN_POSITIVE {
                let gain = (dc - d) / d.abs().max(1e-300);
                phases = cand_ph;
                gains = cand_ga;
                d = dc;
                improved = true;
                step *= 2.0;
                if gain < 1e-9 {
                    *pat = rebuild_pattern(cfg, phases, gains);
                    return Ok(());
                }
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    *pat = rebuild_pattern(cfg, phases, gains);
    Ok(())
}

fn rebuild_pattern(cfg: &SystemConfig, phases: Vec<f64>, gains: Vec<f64>) -> ReflectPattern {
    let phases = phases.into_iter().map(normalize_phase).collect();
    match cfg.architecture {
        Architecture::Active => ReflectPattern::active(phases, gains),
        _ => ReflectPattern::passive(phases),
    }
}
