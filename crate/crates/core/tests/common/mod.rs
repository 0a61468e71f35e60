//! Independent numerical oracles for the acceptance suite: log-domain
//! modified Bessel function, adaptive Simpson quadrature, and the defining
//! integrals of the Marcum Q and noncentral chi-square survival functions.
//! Nothing here shares code with the library's special-function kernels.

use statrs::function::gamma::ln_gamma;

/// `ln I_rho(x)` by the ascending power series with a running-max shift.
pub fn ln_bessel_i(rho: f64, x: f64) -> f64 {
    assert!(rho >= 0.0 && x > 0.0);
    let lh = (x / 2.0).ln();
    let mut lmax = f64::NEG_INFINITY;
    let mut terms: Vec<f64> = Vec::with_capacity(64);
    let mut k = 0f64;
    loop {
        let lt = (2.0 * k + rho) * lh - ln_gamma(k + 1.0) - ln_gamma(k + rho + 1.0);
        terms.push(lt);
        if lt > lmax {
            lmax = lt;
        }
        // past the peak and negligible
        if k > (x / 2.0 - rho / 2.0).max(0.0) + 8.0 && lt < lmax - 45.0 {
            break;
        }
        k += 1.0;
        if k > 1e6 {
            break;
        }
    }
    let sum: f64 = terms.iter().map(|&lt| (lt - lmax).exp()).sum();
    lmax + sum.ln()
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Defining integral of the generalized Marcum Q-function,
/// `Q_m(a, b) = a^{1-m} \int_b^\infty x^m e^{-(x^2+a^2)/2} I_{m-1}(a x) dx`,
/// requiring `a > 0`.
pub fn marcum_q_oracle(m: u32, a: f64, b: f64) -> f64 {
    assert!(a > 0.0);
    let mf = m as f64;
    let integrand = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let ln_f = mf * x.ln() - (mf - 1.0) * a.ln() - (x * x + a * a) / 2.0
            + ln_bessel_i(mf - 1.0, a * x);
        ln_f.exp()
    };
    let hi = (a.max(b) + 12.0).max(b + 1.0);
    adaptive_simpson(&integrand, b, hi, 5e-13).min(1.0)
}

/// Defining integral of the noncentral chi-square survival function with
/// density `p(t) = (1/2)(t/lam)^{(nu-2)/4} e^{-(t+lam)/2} I_{nu/2-1}(sqrt(lam t))`,
/// requiring `lam > 0`.
pub fn nc_chi2_sf_oracle(nu: f64, lam: f64, x: f64) -> f64 {
    assert!(lam > 0.0);
    let integrand = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let ln_p = -(2f64.ln()) + (nu - 2.0) / 4.0 * (t.ln() - lam.ln()) - (t + lam) / 2.0
            + ln_bessel_i(nu / 2.0 - 1.0, (lam * t).sqrt());
        ln_p.exp()
    };
    let spread = (2.0 * nu + 4.0 * lam).sqrt();
    let hi = (nu + lam + 14.0 * spread).max(x + spread);
    if x >= hi {
        return 0.0;
    }
    adaptive_simpson(&integrand, x.max(1e-300), hi, 5e-13).min(1.0)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>()
}
