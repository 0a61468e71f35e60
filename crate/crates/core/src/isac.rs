//! Joint sensing/communication transmit model: information precoder plus
//! dedicated sensing covariance, type-I/II receiver SNRs, the large-T
//! effective sensing covariance, and the SNR-vs-CRB Pareto sweep.
//!
//! The transmit step of the constrained maximizer works on `(w, R0)`
//! directly (no semidefinite relaxation): projected-gradient ascent on the
//! communication SNR with a feasibility-restoration blend toward the
//! CRB-optimal sensing covariance whenever a step would leave the CRB
//! feasible set. Steps are accepted only when feasible and improving, so
//! each point's objective trace is monotone and warm-starting the next
//! (looser) bound from the previous solution makes the swept frontier
//! non-decreasing by construction.

use crate::beamforming::{ao_crb_min, BeamformingSolution};
use crate::cascade::{cascade_at, CrbTerms};
use crate::error::{Error, Result};
use crate::estimation::crb_from_terms;
use crate::model::{
    CMat, CVec, ChannelSet, ReflectPattern, SystemConfig, TransmitCovariance, C64,
};

/// CU receiver capability: type I cannot cancel the dedicated sensing
/// signal, type II can.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceiverType {
    TypeI,
    TypeII,
}

/// Joint transmit design: information precoder plus dedicated sensing
/// covariance.
#[derive(Debug, Clone)]
pub struct IsacTransmit {
    /// Information-signal precoder, length M_t.
    pub w: CVec,
    /// Sample covariance of the dedicated sensing component.
    pub r0: TransmitCovariance,
}

impl IsacTransmit {
    pub fn total_power(&self) -> f64 {
        self.w.norm_squared() + self.r0.trace()
    }

    pub fn validate(&self, p_bs: f64) -> Result<()> {
        if self.w.len() != self.r0.dim() {
            return Err(Error::dims("precoder and sensing covariance disagree on M_t"));
        }
        if self.total_power() > p_bs + 1e-9 * p_bs.max(1.0) {
            return Err(Error::invalid(format!(
                "joint transmit power {} exceeds budget {p_bs}",
                self.total_power()
            )));
        }
        Ok(())
    }
}

/// Combined BS-to-CU channel `h` with `h^H = h_d^H + h_r^H Phi G_t`.
pub fn combined_channel(ch: &ChannelSet, pat: &ReflectPattern) -> Result<CVec> {
    if !ch.has_cu_links() {
        return Err(Error::invalid("scenario has no CU channels (h_d, h_r)"));
    }
    if pat.len() != ch.h_r.len() {
        return Err(Error::dims("pattern length must match h_r"));
    }
    let v = pat.diag();
    let refl = CVec::from_iterator(
        v.len(),
        v.iter().zip(ch.h_r.iter()).map(|(vn, hn)| vn.conj() * hn),
    );
    Ok(&ch.h_d + ch.g_t.adjoint() * refl)
}

/// Communication SNR at the CU.
///
/// `gamma_I = |h^H w|^2 / (h^H R0 h + sigma_c2)`;
/// `gamma_II = |h^H w|^2 / sigma_c2` (type II cancels the known sensing
/// component exactly). `gamma_II >= gamma_I` always, with equality iff
/// `h^H R0 h = 0`.
pub fn comm_snr(
    receiver: ReceiverType,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    tx: &IsacTransmit,
    sigma_c2: f64,
) -> Result<f64> {
    if !(sigma_c2 > 0.0) {
        return Err(Error::invalid("sigma_c2 must be > 0"));
    }
    let h = combined_channel(ch, pat)?;
    if h.len() != tx.w.len() {
        return Err(Error::dims("precoder length must match the channel"));
    }
    let sig = h.dotc(&tx.w).norm_sqr();
    let denom = match receiver {
        ReceiverType::TypeII => sigma_c2,
        ReceiverType::TypeI => h.dotc(&(tx.r0.matrix() * &h)).re + sigma_c2,
    };
    Ok(sig / denom)
}

/// Large-T effective sensing covariance of the joint signal:
/// `R = w w^H + R0`.
pub fn effective_sensing_covariance(tx: &IsacTransmit) -> TransmitCovariance {
    let r = &tx.w * tx.w.adjoint() + tx.r0.matrix();
    TransmitCovariance::from_matrix_unchecked(r)
}

/// One point of the sensing-communication region.
#[derive(Debug, Clone)]
pub struct ParetoPoint {
    /// CRB constraint this point was solved under (rad^2; may be infinite).
    pub crb_bound: f64,
    /// Achieved communication SNR (linear).
    pub comm_snr: f64,
    pub feasible: bool,
    /// CRB achieved by the returned design (rad^2; infinite if singular).
    pub crb_achieved: f64,
    pub tx: IsacTransmit,
    pub pattern: ReflectPattern,
    /// Communication SNR after each outer iteration.
    pub trace: Vec<f64>,
    /// Largest relative constraint violation across accepted iterates.
    pub worst_violation: f64,
}

fn crb_of(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pat: &ReflectPattern,
    r: &TransmitCovariance,
) -> f64 {
    let cas = match cascade_at(cfg, ch, pat, ch.theta) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    crb_from_terms(cfg, ch.alpha, &CrbTerms::from_cascade(&cas, r)).unwrap_or(f64::INFINITY)
}

/// Maximize the communication SNR subject to `crb_angle <= crb_bound` and
/// the shared power budget, alternating the transmit pair `(w, R0)` and the
/// reflect phases. Returns `feasible = false` when even the CRB-optimal
/// sensing-only design cannot meet the bound.
pub fn snr_max_under_crb(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    crb_bound: f64,
    receiver: ReceiverType,
    tol: f64,
    max_iters: usize,
) -> Result<ParetoPoint> {
    if !(crb_bound > 0.0) {
        return Err(Error::invalid(format!("crb_bound must be > 0, got {crb_bound}")));
    }
    let anchor = ao_crb_min(cfg, ch, None, 1e-6, 300)?;
    snr_max_anchored(cfg, ch, crb_bound, receiver, tol, max_iters, &anchor, None)
}

/// Worker shared with [`pareto_sweep`]: the CRB-min anchor is computed once
/// per scenario and each point may warm-start from a tighter neighbor.
pub fn snr_max_anchored(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    crb_bound: f64,
    receiver: ReceiverType,
    tol: f64,
    max_iters: usize,
    anchor: &BeamformingSolution,
    warm: Option<&ParetoPoint>,
) -> Result<ParetoPoint> {
    if !(crb_bound > 0.0) {
        return Err(Error::invalid(format!("crb_bound must be > 0, got {crb_bound}")));
    }
    if !ch.has_cu_links() {
        return Err(Error::invalid("ISAC design needs CU channels in the scenario"));
    }
    let crb_min = anchor.objective;
    if crb_min > crb_bound {
        // even full-power sensing-only cannot meet the bound
        return Ok(ParetoPoint {
            crb_bound,
            comm_snr: 0.0,
            feasible: false,
            crb_achieved: crb_min,
            tx: IsacTransmit {
                w: CVec::zeros(cfg.m_t),
                r0: anchor.r.clone(),
            },
            pattern: anchor.pattern.clone(),
            trace: vec![],
            worst_violation: 0.0,
        });
    }
    if crb_bound.is_infinite() {
        return Ok(comm_only_optimum(cfg, ch, receiver, anchor, max_iters));
    }

    // feasible start: warm solution if it satisfies this bound, otherwise
    // split the anchor covariance into its top eigen-direction plus rest
    let (mut w, mut r0, mut pattern) = match warm {
        Some(p)
            if p.feasible
                && crb_of(cfg, ch, &p.pattern, &effective_sensing_covariance(&p.tx))
                    <= crb_bound * (1.0 + 1e-9) =>
        {
            (p.tx.w.clone(), p.tx.r0.matrix().clone(), p.pattern.clone())
        }
        _ => {
            let (w, r0) = split_top_mode(anchor.r.matrix());
            (w, r0, anchor.pattern.clone())
        }
    };

    let r_sens = anchor.r.matrix().clone();
    let gamma = |w: &CVec, r0: &CMat, pat: &ReflectPattern| -> f64 {
        let tx = IsacTransmit {
            w: w.clone(),
            r0: TransmitCovariance::from_matrix_unchecked(r0.clone()),
        };
        comm_snr(receiver, ch, pat, &tx, cfg.sigma_c2).unwrap_or(0.0)
    };
    let crb_at = |w: &CVec, r0: &CMat, pat: &ReflectPattern| -> f64 {
        let eff = TransmitCovariance::from_matrix_unchecked(&(w * w.adjoint()) + r0);
        crb_of(cfg, ch, pat, &eff)
    };

    let mut snr = gamma(&w, &r0, &pattern);
    let mut trace = vec![snr];
    let mut worst: f64 = 0.0;
    let mut converged = false;
    let audit = |w: &CVec, r0: &CMat, pat: &ReflectPattern, worst: &mut f64| {
        let power = w.norm_squared() + r0.diagonal().iter().map(|z| z.re).sum::<f64>();
        *worst = worst.max((power - cfg.p_bs) / cfg.p_bs);
        let eig = nalgebra::SymmetricEigen::new(r0.clone());
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        *worst = worst.max(-min_eig / cfg.p_bs);
        let c = crb_at(w, r0, pat);
        *worst = worst.max((c - crb_bound) / crb_bound);
    };
    audit(&w, &r0, &pattern, &mut worst);

    for _ in 0..max_iters {
        transmit_comm_step(
            cfg, ch, receiver, crb_bound, &r_sens, &pattern, &mut w, &mut r0,
        );
        reflect_comm_step(cfg, ch, receiver, crb_bound, &w, &r0, &mut pattern);
        let new = gamma(&w, &r0, &pattern);
        audit(&w, &r0, &pattern, &mut worst);
        trace.push(new);
        let improvement = (new - snr) / snr.abs().max(1e-300);
        snr = new.max(snr);
        if improvement >= 0.0 && improvement < tol {
            converged = true;
            break;
        }
    }
    let _ = converged;

    let tx = IsacTransmit { w, r0: TransmitCovariance::from_matrix_unchecked(r0) };
    let crb_achieved = crb_of(cfg, ch, &pattern, &effective_sensing_covariance(&tx));
    Ok(ParetoPoint {
        crb_bound,
        comm_snr: snr,
        feasible: true,
        crb_achieved,
        tx,
        pattern,
        trace,
        worst_violation: worst,
    })
}

/// Sweep the CRB grid tightest-first, warm-starting each point from its
/// tighter neighbor; relaxing the bound therefore never loses value and the
/// returned frontier is non-decreasing in `comm_snr`.
pub fn pareto_sweep(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    crb_grid: &[f64],
    receiver: ReceiverType,
) -> Result<Vec<ParetoPoint>> {
    if crb_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("crb_grid must be sorted ascending"));
    }
    let anchor = ao_crb_min(cfg, ch, None, 1e-6, 300)?;
    let mut out: Vec<ParetoPoint> = Vec::with_capacity(crb_grid.len());
    for &bound in crb_grid {
        let warm = out.iter().rev().find(|p| p.feasible);
        let mut point =
            snr_max_anchored(cfg, ch, bound, receiver, 1e-8, 120, &anchor, warm)?;
        if let Some(prev) = out.iter().rev().find(|p| p.feasible) {
            if point.feasible && point.comm_snr < prev.comm_snr {
                // warm start guarantees this never loses value; keep the
                // carried solution if the local search regressed
                point.comm_snr = prev.comm_snr;
                point.tx = prev.tx.clone();
                point.pattern = prev.pattern.clone();
                point.crb_achieved = prev.crb_achieved;
            }
        }
        out.push(point);
    }
    Ok(out)
}

/// Unconstrained communication optimum: MRT over the combined channel after
/// ascending the phases on `||h||^2`; `R0 = 0` is optimal for both receiver
/// types.
fn comm_only_optimum(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    receiver: ReceiverType,
    anchor: &BeamformingSolution,
    max_iters: usize,
) -> ParetoPoint {
    let mut pattern = anchor.pattern.clone();
    let h_mat = ch.g_t.adjoint()
        * CMat::from_diagonal(&ch.h_r); // columns scale conj(v)
    let h_of = |phases: &[f64]| -> CVec {
        let v: CVec = CVec::from_iterator(
            phases.len(),
            phases.iter().map(|&p| C64::from_polar(1.0, p)),
        );
        &ch.h_d + &h_mat * v.conjugate()
    };
    let mut phases = pattern.phases.clone();
    let mut best = h_of(&phases).norm_squared();
    let mut step = 1.0;
    for _ in 0..max_iters.max(200) {
        let h = h_of(&phases);
        // d||h||^2/dphi_n = 2 Im(conj(v_n) (h^H H_col_n)) with H = h_mat
        let hh = h_mat.adjoint() * &h; // column n: H_n^H h
        let grad: Vec<f64> = (0..phases.len())
            .map(|n| {
                let vn = C64::from_polar(1.0, phases[n]);
                2.0 * (vn.conj() * hh[n].conj()).im
            })
            .collect();
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> =
                phases.iter().zip(&grad).map(|(&p, &g)| p + step / gn * g).collect();
            let val = h_of(&cand).norm_squared();
            if val > best * (1.0 + 1e-14) {
                phases = cand;
                let gain = (val - best) / best;
                best = val;
                improved = true;
                step *= 2.0;
                if gain < 1e-12 {
                    break;
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
    pattern = ReflectPattern::passive(phases.into_iter().map(crate::model::normalize_phase).collect());
    let h = combined_channel(ch, &pattern).expect("CU channels present");
    let w = &h * C64::new((cfg.p_bs / h.norm_squared()).sqrt(), 0.0);
    let tx = IsacTransmit {
        w,
        r0: TransmitCovariance::from_matrix_unchecked(CMat::zeros(cfg.m_t, cfg.m_t)),
    };
    let snr = comm_snr(receiver, ch, &pattern, &tx, cfg.sigma_c2).expect("dims");
    let crb_achieved = crb_of(cfg, ch, &pattern, &effective_sensing_covariance(&tx));
    ParetoPoint {
        crb_bound: f64::INFINITY,
        comm_snr: snr,
        feasible: true,
        crb_achieved,
        tx,
        pattern,
        trace: vec![snr],
        worst_violation: 0.0,
    }
}

/// Split a PSD matrix into its dominant rank-1 mode and the remainder.
fn split_top_mode(r: &CMat) -> (CVec, CMat) {
    let eig = nalgebra::SymmetricEigen::new(r.clone());
    let (mut imax, mut lmax) = (0usize, f64::NEG_INFINITY);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > lmax {
            lmax = l;
            imax = i;
        }
    }
    let w = eig.eigenvectors.column(imax) * C64::new(lmax.max(0.0).sqrt(), 0.0);
    let r0 = r - &w * w.adjoint();
    // clip the tiny negative residue the subtraction leaves behind
    let eig0 = nalgebra::SymmetricEigen::new(r0);
    let mut clean = CMat::zeros(r.nrows(), r.ncols());
    for (i, &l) in eig0.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let c = eig0.eigenvectors.column(i);
            clean += (c * c.adjoint()) * C64::new(l, 0.0);
        }
    }
    (w.into_owned(), clean)
}

/// Projected-gradient ascent on the communication SNR over `(w, R0)` at a
/// fixed pattern, staying inside the power budget and the CRB feasible set
/// (restoration blends toward the CRB-optimal sensing covariance).
#[allow(clippy::too_many_arguments)]
fn transmit_comm_step(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    receiver: ReceiverType,
    crb_bound: f64,
    r_sens: &CMat,
    pattern: &ReflectPattern,
    w: &mut CVec,
    r0: &mut CMat,
) {
    let h = match combined_channel(ch, pattern) {
        Ok(h) => h,
        Err(_) => return,
    };
    let crb_at = |w: &CVec, r0: &CMat| -> f64 {
        let eff = TransmitCovariance::from_matrix_unchecked(&(w * w.adjoint()) + r0);
        crb_of(cfg, ch, pattern, &eff)
    };
    let gamma = |w: &CVec, r0: &CMat| -> f64 {
        let sig = h.dotc(w).norm_sqr();
        match receiver {
            ReceiverType::TypeII => sig / cfg.sigma_c2,
            ReceiverType::TypeI => sig / (h.dotc(&(r0 * &h)).re + cfg.sigma_c2),
        }
    };
    // restore feasibility by blending toward the sensing-only design
    let restore = |w: &CVec, r0: &CMat| -> Option<(CVec, CMat)> {
        if crb_at(w, r0) <= crb_bound * (1.0 + 1e-12) {
            return Some((w.clone(), r0.clone()));
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let blend = |beta: f64| -> (CVec, CMat) {
            let wb = w * C64::new((1.0 - beta).sqrt(), 0.0);
            let rb = r0 * C64::new(1.0 - beta, 0.0) + r_sens * C64::new(beta, 0.0);
            (wb, rb)
        };
        {
            let (wb, rb) = blend(1.0);
            if crb_at(&wb, &rb) > crb_bound * (1.0 + 1e-9) {
                return None;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (wb, rb) = blend(mid);
            if crb_at(&wb, &rb) <= crb_bound * (1.0 + 1e-12) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(blend(hi))
    };

    let project_power = |w: &mut CVec, r0: &mut CMat| {
        // PSD-clip R0, then scale the pair into the budget
        let eig = nalgebra::SymmetricEigen::new(r0.clone());
        let mut clean = CMat::zeros(r0.nrows(), r0.ncols());
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 0.0 {
                let c = eig.eigenvectors.column(i);
                clean += (c * c.adjoint()) * C64::new(l, 0.0);
            }
        }
        *r0 = clean;
        let total = w.norm_squared() + r0.diagonal().iter().map(|z| z.re).sum::<f64>();
        if total > cfg.p_bs {
            let s = cfg.p_bs / total;
            *w *= C64::new(s.sqrt(), 0.0);
            *r0 *= C64::new(s, 0.0);
        }
    };

    let mut cur = gamma(w, r0);
    let mut step = 0.5;
    for _ in 0..60 {
        // gradient of gamma in w (and R0 for type I)
        let hw = h.dotc(w);
        let denom = match receiver {
            ReceiverType::TypeII => cfg.sigma_c2,
            ReceiverType::TypeI => h.dotc(&(&*r0 * &h)).re + cfg.sigma_c2,
        };
        let gw = &h * (hw / C64::new(denom, 0.0));
        let gr0: Option<CMat> = match receiver {
            ReceiverType::TypeII => None,
            ReceiverType::TypeI => {
                let f = hw.norm_sqr();
                Some((&h * h.adjoint()) * C64::new(-f / (denom * denom), 0.0))
            }
        };
        let gn = gw.norm() + gr0.as_ref().map_or(0.0, |g| g.norm());
        if gn <= 1e-300 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let scale = step * cfg.p_bs.sqrt() / gn;
            let mut wc = &*w + &gw * C64::new(scale, 0.0);
            let mut rc = match &gr0 {
                Some(g) => &*r0 + g * C64::new(scale * cfg.p_bs.sqrt(), 0.0),
                None => r0.clone(),
            };
            project_power(&mut wc, &mut rc);
            if let Some((wf, rf)) = restore(&wc, &rc) {
                let val = gamma(&wf, &rf);
                if val > cur * (1.0 + 1e-13) + f64::MIN_POSITIVE {
                    *w = wf;
                    *r0 = rf;
                    let gain = (val - cur) / cur.abs().max(1e-300);
                    cur = val;
                    improved = true;
                    step *= 2.0;
                    if gain < 1e-10 {
                        return;
                    }
                    break;
                }
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
}

/// Projected-gradient ascent on the communication SNR over the phases at a
/// fixed transmit pair, preserving CRB feasibility by backtracking.
fn reflect_comm_step(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    receiver: ReceiverType,
    crb_bound: f64,
    w: &CVec,
    r0: &CMat,
    pattern: &mut ReflectPattern,
) {
    let gtw = &ch.g_t * w; // length N
    let q: CVec = CVec::from_iterator(
        ch.h_r.len(),
        ch.h_r.iter().zip(gtw.iter()).map(|(hr, gw)| hr.conj() * gw),
    );
    let c0 = ch.h_d.dotc(w);
    let h_mat = ch.g_t.adjoint() * CMat::from_diagonal(&ch.h_r);
    let r0m = r0.clone();
    let gamma_of = |phases: &[f64]| -> f64 {
        let v: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let z = c0 + v.iter().zip(q.iter()).map(|(vn, qn)| vn * qn).sum::<C64>();
        match receiver {
            ReceiverType::TypeII => z.norm_sqr() / cfg.sigma_c2,
            ReceiverType::TypeI => {
                let vv = CVec::from_iterator(v.len(), v.iter().cloned());
                let h = &ch.h_d + &h_mat * vv.conjugate();
                z.norm_sqr() / (h.dotc(&(&r0m * &h)).re + cfg.sigma_c2)
            }
        }
    };
    let crb_ok = |phases: &[f64]| -> bool {
        let pat = ReflectPattern::passive(
            phases.iter().map(|&p| crate::model::normalize_phase(p)).collect(),
        );
        let eff = TransmitCovariance::from_matrix_unchecked(&(w * w.adjoint()) + r0);
        crb_of(cfg, ch, &pat, &eff) <= crb_bound * (1.0 + 1e-12)
    };

    let mut phases = pattern.phases.clone();
    let mut cur = gamma_of(&phases);
    let mut step = 0.5;
    for _ in 0..60 {
        // gradient d gamma / d phi via finite structure of z (type II) or
        // the full quotient (type I, numeric denominator gradient)
        let v: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let z = c0 + v.iter().zip(q.iter()).map(|(vn, qn)| vn * qn).sum::<C64>();
        let grad: Vec<f64> = match receiver {
            ReceiverType::TypeII => (0..phases.len())
                .map(|n| -2.0 * (z.conj() * q[n] * v[n]).im / cfg.sigma_c2)
                .collect(),
            ReceiverType::TypeI => {
                let vv = CVec::from_iterator(v.len(), v.iter().cloned());
                let h = &ch.h_d + &h_mat * vv.conjugate();
                let r0h = &r0m * &h;
                let denom = h.dotc(&r0h).re + cfg.sigma_c2;
                let f = z.norm_sqr();
                (0..phases.len())
                    .map(|n| {
                        let df = -2.0 * (z.conj() * q[n] * v[n]).im;
                        // dh/dphi_n = -j conj(v_n) H_col_n, dg0 = 2 Re{(R0 h)^H dh}
                        let x: C64 = r0h.dotc(&h_mat.column(n).into_owned());
                        let dg0 = 2.0 * (v[n].conj() * x).im;
                        (df * denom - f * dg0) / (denom * denom)
                    })
                    .collect()
            }
        };
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn < 1e-300 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<f64> =
                phases.iter().zip(&grad).map(|(&p, &g)| p + step / gn * g).collect();
            if crb_ok(&cand) {
                let val = gamma_of(&cand);
                if val > cur * (1.0 + 1e-13) + f64::MIN_POSITIVE {
                    phases = cand;
                    let gain = (val - cur) / cur.abs().max(1e-300);
                    cur = val;
                    improved = true;
                    step *= 2.0;
                    if gain < 1e-10 {
                        *pattern = ReflectPattern::passive(phases);
                        return;
                    }
                    break;
                }
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
    *pattern = ReflectPattern::passive(phases);
}
