//! Wright function `Φ(−β, δ, z)` and the radial transform family
//! `f_β(z; μ, δ)` built from it.
//!
//! For moderate arguments the Wright function is summed from its power series
//! with reciprocal-Gamma coefficients. For large negative arguments the series
//! suffers catastrophic cancellation (the largest term grows like
//! `exp((1−β) m*)` with `m* = (|z| β^β)^{1/(1−β)}`), so the function is
//! evaluated from its Hankel-contour integral deformed onto the steepest
//! descent path through the saddle point `u₀ = β^{1/(1−β)}`. Along that path
//! the exponent is real and the integrand does not oscillate.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::integrate_adaptive;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrightParams {
    pub beta: f64,
    pub delta: f64,
}

impl WrightParams {
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {beta} must lie in (0, 1)")));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be finite")));
        }
        Ok(Self { beta, delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FFamilyParams {
    pub mu: f64,
    pub delta: f64,
    pub beta: f64,
}

impl FFamilyParams {
    pub fn new(mu: f64, delta: f64, beta: f64) -> Result<Self> {
        WrightParams::new(beta, delta)?;
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu = {mu} must be finite and >= 0")));
        }
        Ok(Self { mu, delta, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub abs_error_bound: f64,
    pub terms_used: usize,
}

/// Evaluation controls for the Wright function.
#[derive(Debug, Clone, Copy)]
pub struct WrightConfig {
    /// Relative stopping tolerance.
    pub tol: f64,
    pub max_terms: usize,
    /// Positive arguments beyond this radius are rejected.
    pub series_radius: f64,
    /// Largest tolerated `ln` of the series cancellation factor for negative
    /// arguments before switching to the contour integral.
    pub max_cancellation_log: f64,
    /// Permit the steepest-descent contour route for negative arguments.
    pub allow_contour: bool,
}

impl Default for WrightConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 800,
            series_radius: 30.0,
            max_cancellation_log: 4.6,
            allow_contour: true,
        }
    }
}

/// `sin(πx)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    let r = x - 2.0 * (0.5 * x).round();
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// `1/Γ(x)`, finite for every real `x` and exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x > 0.0 {
        if x < 170.0 {
            1.0 / libm::tgamma(x)
        } else {
            (-libm::lgamma(x)).exp()
        }
    } else {
        let s = sin_pi(x);
        if 1.0 - x < 170.0 {
            s * libm::tgamma(1.0 - x) / PI
        } else {
            s.signum() * (s.abs().ln() + libm::lgamma(1.0 - x) - PI.ln()).exp()
        }
    }
}

/// `(ln |1/Γ(x)|, sign(1/Γ(x)))`; the sign is 0 at the poles.
fn log_rgamma(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (-libm::lgamma(x), 1.0);
    }
    let s = sin_pi(x);
    if s == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    (s.abs().ln() + libm::lgamma(1.0 - x) - PI.ln(), s.signum())
}

/// Upper envelope of `ln |1/Γ(x)|` (the sine factor replaced by 1).
fn log_rgamma_envelope(x: f64) -> f64 {
    if x > 0.0 {
        // max of 1/Γ on (0, ∞) is ≈ 1.1292 at x ≈ 1.4616
        (1.13f64).ln()
    } else {
        libm::lgamma(1.0 - x) - PI.ln()
    }
}

/// `Φ(−β, δ, z) = Σ_m z^m / (m! Γ(δ − βm))`.
pub fn wright_phi(params: WrightParams, z: f64) -> Result<EvalResult> {
    wright_phi_with(params, z, &WrightConfig::default())
}

pub fn wright_phi_with(params: WrightParams, z: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    let WrightParams { beta, delta } = params;
    if !z.is_finite() {
        return Err(Error::Domain(format!("Wright argument z = {z} is not finite")));
    }
    if z >= 0.0 {
        if z > cfg.series_radius {
            return Err(Error::NonConvergence(format!(
                "z = {z} beyond the series radius {} for positive arguments",
                cfg.series_radius
            )));
        }
        return wright_series(beta, delta, z, cfg);
    }
    let x = -z;
    if series_cancellation_log(beta, x) <= cfg.max_cancellation_log || !cfg.allow_contour {
        match wright_series(beta, delta, z, cfg) {
            Ok(r) => return Ok(r),
            Err(e) if !cfg.allow_contour => return Err(e),
            Err(_) => {}
        }
    }
    wright_contour(beta, delta, x, cfg)
}

/// `d/dz Φ(−β, δ, z) = Φ(−β, δ − β, z)`.
pub fn wright_phi_dz(params: WrightParams, z: f64) -> Result<EvalResult> {
    wright_phi(WrightParams::new(params.beta, params.delta - params.beta)?, z)
}

/// Estimated `ln` of the largest series term magnitude for `Φ(−β, ·, −x)`.
fn series_cancellation_log(beta: f64, x: f64) -> f64 {
    let mstar = (x * beta.powf(beta)).powf(1.0 / (1.0 - beta));
    (1.0 - beta) * mstar
}

fn wright_series(beta: f64, delta: f64, z: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    if z == 0.0 {
        let v = rgamma(delta);
        return Ok(EvalResult { value: v, abs_error_bound: 4.0 * EPS * v.abs(), terms_used: 1 });
    }
    let ln_abs_z = z.abs().ln();
    let neg = z < 0.0;
    let log_env = |m: usize| -> f64 {
        let mf = m as f64;
        mf * ln_abs_z - libm::lgamma(mf + 1.0) + log_rgamma_envelope(delta - beta * mf)
    };

    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut rounding = 0.0f64;
    let mut small_run = 0usize;
    // |z|^m / m! by recurrence; stays finite for |z| up to the series radius
    let mut pw = 1.0f64;
    for m in 0..cfg.max_terms {
        let mf = m as f64;
        if m > 0 {
            pw *= z.abs() / mf;
        }
        let arg = delta - beta * mf;
        let sign = if neg && m % 2 == 1 { -1.0 } else { 1.0 };
        let term = if is_nonpositive_integer(arg) {
            0.0
        } else {
            let rg = rgamma(arg);
            let t = if pw > 1e-280 && rg.is_finite() && (1.0 - arg) < 170.0 {
                sign * pw * rg
            } else {
                let (lr, sg) = log_rgamma(arg);
                let l = mf * ln_abs_z - libm::lgamma(mf + 1.0) + lr;
                sign * sg * l.exp()
            };
            rounding += t.abs() * (mf + 8.0) * EPS;
            t
        };
        // Neumaier compensated summation
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;
        let total = sum + comp;

        if term.abs() <= cfg.tol * total.abs() {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= 3 {
            let e1 = log_env(m + 1);
            let e2 = log_env(m + 2);
            let ratio = (e2 - e1).exp();
            if ratio < 0.9 {
                let remainder = e1.exp() / (1.0 - ratio);
                if remainder <= cfg.tol * total.abs().max(1e-300) {
                    return Ok(EvalResult {
                        value: total,
                        abs_error_bound: remainder + rounding + EPS * total.abs(),
                        terms_used: m + 1,
                    });
                }
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "Wright series (beta={beta}, delta={delta}, z={z}) not converged within {} terms",
        cfg.max_terms
    )))
}

/// `Φ(−β, δ, −x)` for `x > 0` along the steepest-descent path.
///
/// With `λ = x^{1/(1−β)}` and `s = λu`, the integral becomes
/// `λ^{1−δ}/(2πi) ∫ exp(λ(u − u^β)) u^{−δ} du`; the path is
/// `u = ρ(φ) e^{iφ}`, `ρ(φ) = (sin βφ / sin φ)^{1/(1−β)}`, `φ ∈ (−π, π)`.
fn wright_contour(beta: f64, delta: f64, x: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    let p = 1.0 / (1.0 - beta);
    let ln_lam = p * x.ln();
    let lam = ln_lam.exp();
    let ln_rho0 = p * beta.ln();
    let rho0 = ln_rho0.exp();
    let h0 = -rho0 * (1.0 - beta) / beta;
    let peak_log = lam * h0 + (1.0 - delta) * (ln_lam + ln_rho0);
    if lam * h0 + (1.0 - delta).abs() * ln_lam.abs() + 60.0 < -745.0 {
        return Ok(EvalResult { value: 0.0, abs_error_bound: f64::MIN_POSITIVE, terms_used: 0 });
    }
    let one_m_delta = 1.0 - delta;
    let integrand = |phi: f64| -> f64 {
        let (ln_rho, dlog_rho, h) = if phi < 1e-6 {
            let rho = rho0;
            (ln_rho0, (1.0 + beta) * phi / 3.0, -rho * (1.0 - beta) / beta)
        } else {
            let sb = (beta * phi).sin();
            let sp = phi.sin();
            if sp <= 0.0 {
                return 0.0;
            }
            let ln_rho = p * (sb.ln() - sp.ln());
            let rho = ln_rho.exp();
            if !rho.is_finite() {
                return 0.0;
            }
            let dlr = p * (beta / (beta * phi).tan() - 1.0 / phi.tan());
            (ln_rho, dlr, -rho * ((1.0 - beta) * phi).sin() / sb)
        };
        let lh = lam * h;
        if lh < -800.0 {
            return 0.0;
        }
        let log_part = lh + one_m_delta * (ln_lam + ln_rho);
        if log_part < -745.0 {
            return 0.0;
        }
        let a = one_m_delta * phi;
        log_part.exp() * (dlog_rho * a.sin() + a.cos())
    };
    let width = (1.0 / lam.sqrt()).min(PI);
    let scale = peak_log.exp() * width;
    // relative accuracy of exp(λh) is limited by rounding in the exponent
    let noise = 20.0 * EPS * (lam * h0.abs() + peak_log.abs() + 1.0);
    let q = integrate_adaptive(integrand, 0.0, PI, 1e-3 * cfg.tol * scale, (0.1 * cfg.tol).max(noise), 400)
        .map_err(|e| {
            Error::NonConvergence(format!("Wright contour integral (beta={beta}, delta={delta}, x={x}): {e}"))
        })?;
    let value = q.value / PI;
    let rounding = EPS * (lam * h0.abs() + peak_log.abs() + 50.0) * q.abs_value / PI;
    Ok(EvalResult { value, abs_error_bound: q.error / PI + rounding, terms_used: q.evals })
}

/// The transform family
/// `f_β(z; μ, δ) = (2/Γ(μ/2)) ∫₁^∞ Φ(−β, δ, −zt) (t² − 1)^{μ/2 − 1} dt` for `μ > 0`,
/// and `Φ(−β, δ, −z)` for `μ = 0`.
pub fn f_family(params: FFamilyParams, z: f64) -> Result<EvalResult> {
    f_family_with(params, z, &WrightConfig::default())
}

pub fn f_family_with(params: FFamilyParams, z: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    let FFamilyParams { mu, delta, beta } = params;
    if mu == 0.0 {
        if z < 0.0 {
            return Err(Error::Domain(format!("f-family needs z >= 0, got {z}")));
        }
        return wright_phi_with(WrightParams { beta, delta }, -z, cfg);
    }
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("f-family with mu = {mu} > 0 needs finite z > 0, got {z}")));
    }
    let half = 0.5 * mu;
    if half.fract() == 0.0 && half <= 4.0 {
        return f_family_even(beta, delta, half as usize, z, cfg);
    }
    f_family_quadrature(beta, delta, mu, z, cfg)
}

/// Coefficients `D_i` with `f(z; 2k, δ) = Σ_i D_i z^{−1−i} Φ(−β, δ+(i+1)β, −z)`.
///
/// Obtained by expanding `(t²−1)^{k−1}` and integrating `t^j Φ(−β, δ, −zt)` by
/// parts with the antiderivative `−Φ(−β, δ+β, −u)`; cancellations between the
/// expansion terms happen exactly in the integer coefficients.
fn even_mu_coefficients(k: usize) -> Vec<f64> {
    let mut d = vec![0.0; 2 * k - 1];
    let pref = 2.0 / libm::tgamma(k as f64);
    for ip in 0..k {
        let binom = binomial(k - 1, ip);
        let sign = if (k - 1 - ip) % 2 == 0 { 1.0 } else { -1.0 };
        let j = 2 * ip;
        let mut falling = 1.0;
        for (i, di) in d.iter_mut().enumerate().take(j + 1) {
            if i > 0 {
                falling *= (j + 1 - i) as f64;
            }
            *di += pref * binom * sign * falling;
        }
    }
    d
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn f_family_even(beta: f64, delta: f64, k: usize, z: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    let coeffs = even_mu_coefficients(k);
    let mut value = 0.0;
    let mut bound = 0.0;
    let mut terms = 0;
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let r = wright_phi_with(
            WrightParams { beta, delta: delta + (i as f64 + 1.0) * beta },
            -z,
            cfg,
        )?;
        let w = c * z.powi(-1 - i as i32);
        value += w * r.value;
        bound += w.abs() * r.abs_error_bound + 2.0 * EPS * (w * r.value).abs();
        terms += r.terms_used;
    }
    Ok(EvalResult { value, abs_error_bound: bound, terms_used: terms })
}

fn f_family_quadrature(beta: f64, delta: f64, mu: f64, z: f64, cfg: &WrightConfig) -> Result<EvalResult> {
    let p = 1.0 / (1.0 - beta);
    let sigma = (1.0 - beta) * beta.powf(beta * p);
    // beyond this argument Φ has decayed by ~e^{-90} relative to its value at z
    let z_cut = (z.powf(p) + 90.0 / sigma).powf(1.0 / p);
    let s_max = 1.05 * (z_cut / z).max(1.0 + 1e-12).acosh();
    let wcfg = WrightConfig { tol: cfg.tol * 0.1, ..*cfg };
    let mut failure: Option<Error> = None;
    let mut phi_bound = 0.0;
    let mut g = |s: f64| -> f64 {
        if failure.is_some() {
            return 0.0;
        }
        match wright_phi_with(WrightParams { beta, delta }, -z * s.cosh(), &wcfg) {
            Ok(r) => {
                let w = s.sinh().powf(mu - 1.0);
                phi_bound += r.abs_error_bound * w;
                r.value * w
            }
            Err(e) => {
                failure = Some(e);
                0.0
            }
        }
    };
    let q = if mu < 2.0 {
        // s = v^q turns sinh(s)^{μ−1} ds into a smooth weight near 0
        let qg = 2.0 / mu;
        let v_max = s_max.powf(1.0 / qg);
        integrate_adaptive(
            |v: f64| {
                let s = v.powf(qg);
                g(s) * qg * v.powf(qg - 1.0)
            },
            0.0,
            v_max,
            1e-300,
            cfg.tol,
            1000,
        )
    } else {
        integrate_adaptive(&mut g, 0.0, s_max, 1e-300, cfg.tol, 1000)
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let q = q.map_err(|e| Error::NonConvergence(format!("f-family quadrature (mu={mu}, z={z}): {e}")))?;
    let pref = 2.0 * rgamma(0.5 * mu);
    let value = pref * q.value;
    // Φ errors are accumulated per node without weights; scale by the mean node weight.
    let mean_weight = s_max / q.evals.max(1) as f64;
    let bound = pref.abs() * (q.error + 10.0 * EPS * q.abs_value + phi_bound * mean_weight);
    Ok(EvalResult { value, abs_error_bound: bound, terms_used: q.evals })
}

/// `d/dz f_β(z; μ, δ) = −(z/2) f_β(z; μ+2, δ−2β)`.
pub fn f_family_dz(params: FFamilyParams, z: f64) -> Result<EvalResult> {
    let FFamilyParams { mu, delta, beta } = params;
    if !(z > 0.0) {
        return Err(Error::Domain(format!("f-family derivative needs z > 0, got {z}")));
    }
    let r = f_family(FFamilyParams { mu: mu + 2.0, delta: delta - 2.0 * beta, beta }, z)?;
    Ok(EvalResult {
        value: -0.5 * z * r.value,
        abs_error_bound: 0.5 * z * r.abs_error_bound,
        terms_used: r.terms_used,
    })
}

/// Decay rate of `Φ(−β, δ, −z) ~ exp(−σ z^{1/(1−β)})`.
pub fn wright_decay_rate(beta: f64) -> f64 {
    (1.0 - beta) * beta.powf(beta / (1.0 - beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi(beta: f64, delta: f64, z: f64) -> f64 {
        wright_phi(WrightParams::new(beta, delta).unwrap(), z).unwrap().value
    }

    #[test]
    fn rgamma_vanishes_at_poles_and_matches_gamma() {
        for k in 0..6 {
            assert_eq!(rgamma(-(k as f64)), 0.0);
        }
        assert!((rgamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((rgamma(-0.5) * -2.0 * PI.sqrt() - 1.0).abs() < 1e-14);
        assert!(rgamma(-150.5).is_finite());
    }

    #[test]
    fn value_at_zero_is_reciprocal_gamma() {
        let v = phi(0.75, 0.25, 0.0);
        assert!((v - 1.0 / libm::tgamma(0.25)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_case_on_both_routes() {
        for &z in &[0.3f64, 1.0, 2.0, 3.5, 6.0, 9.0] {
            let exact = (-z * z / 4.0).exp() / PI.sqrt();
            let v = phi(0.5, 0.5, -z);
            assert!((v - exact).abs() < 1e-12, "z={z}: {v} vs {exact}");
        }
    }

    #[test]
    fn series_and_contour_agree_in_overlap() {
        let cfg_series = WrightConfig { allow_contour: false, ..Default::default() };
        for &(b, d) in &[(0.75, 0.25), (0.625, -0.4), (0.875, 0.125), (0.6, 1.7)] {
            for &x in &[0.5f64, 1.0, 1.5, 2.0] {
                if series_cancellation_log(b, x) > 6.0 {
                    continue;
                }
                let s = wright_series(b, d, -x, &cfg_series).unwrap();
                let c = wright_contour(b, d, x, &cfg_series).unwrap();
                assert!((s.value - c.value).abs() < 1e-11, "{b} {d} {x}: {} vs {}", s.value, c.value);
            }
        }
    }

    #[test]
    fn pole_terms_are_exact_zeros() {
        // δ − βm hits 0, −1, ... for every odd m when β = δ = 1/2
        let r = wright_phi(WrightParams::new(0.5, 0.5).unwrap(), -0.4).unwrap();
        assert!(r.value.is_finite());
    }

    #[test]
    fn positive_arguments_beyond_radius_are_rejected() {
        let r = wright_phi(WrightParams::new(0.75, 0.5).unwrap(), 31.0);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }

    #[test]
    fn even_mu_coefficients_match_hand_expansion() {
        assert_eq!(even_mu_coefficients(1), vec![2.0]);
        assert_eq!(even_mu_coefficients(2), vec![0.0, 4.0, 4.0]);
    }

    #[test]
    fn f_family_rejects_nonpositive_argument() {
        let p = FFamilyParams::new(1.0, 0.2, 0.75).unwrap();
        assert!(matches!(f_family(p, 0.0), Err(Error::Domain(_))));
        assert!(matches!(f_family(p, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn even_mu_closed_form_matches_quadrature() {
        for &(mu, d, b, z) in &[(2.0, 0.5, 0.75, 1.0), (4.0, -0.3, 0.625, 0.7), (6.0, 0.1, 0.75, 1.3)] {
            let cf = f_family(FFamilyParams::new(mu, d, b).unwrap(), z).unwrap().value;
            let q = f_family_quadrature(b, d, mu, z, &WrightConfig::default()).unwrap().value;
            assert!((cf - q).abs() <= 1e-9 * cf.abs().max(1.0), "mu={mu}: {cf} vs {q}");
        }
    }
}
