//! Constant-coefficient fundamental triple `(Z₁, Z₂, Y)` and the
//! frozen-coefficient kernels obtained from it by the linear change of
//! variables `r = (yᵀ A y)^{1/2}`, `A = a⁻¹`.
//!
//! Every kernel has the form `c_n t^{δ−1} f(t^{−α/2} r; n−1, δ)` with
//! `δ = 1 − αn/2` (Z₁), `2 − αn/2` (Z₂) or `α − αn/2` (Y). Spatial derivatives
//! are produced in closed form from `f' = −(z/2) f(·; μ+2, δ−α)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::quad::{integrate_adaptive, GaussLegendre};
use crate::special_fn::{f_family, f_family_with, wright_decay_rate, wright_phi, FFamilyParams, WrightConfig, WrightParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Z1,
    Z2,
    Y,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Z1, KernelKind::Z2, KernelKind::Y];

    /// Second f-family parameter `δ`.
    pub fn delta(self, alpha: f64, n: usize) -> f64 {
        let base = -alpha * n as f64 / 2.0;
        match self {
            KernelKind::Z1 => 1.0 + base,
            KernelKind::Z2 => 2.0 + base,
            KernelKind::Y => alpha + base,
        }
    }

    /// `∫ K dx` over ℝⁿ.
    pub fn integral(self, alpha: f64, t: f64) -> f64 {
        match self {
            KernelKind::Z1 => 1.0,
            KernelKind::Z2 => t,
            KernelKind::Y => t.powf(alpha - 1.0) / libm::tgamma(alpha),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Z1 => "Z1",
            KernelKind::Z2 => "Z2",
            KernelKind::Y => "Y",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Z1" => Some(KernelKind::Z1),
            "Z2" => Some(KernelKind::Z2),
            "Y" => Some(KernelKind::Y),
            _ => None,
        }
    }
}

/// Which derivative of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Value,
    /// `∂/∂y_i`
    D1(usize),
    /// `∂²/∂y_i∂y_j`
    D2(usize, usize),
    /// `∂/∂t`
    Dt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelId {
    pub which: KernelKind,
    pub deriv: Deriv,
}

impl KernelId {
    pub fn value(which: KernelKind) -> Self {
        Self { which, deriv: Deriv::Value }
    }
}

/// `c_n = 2^{−n} π^{(1−n)/2}`.
pub fn c_n(n: usize) -> f64 {
    2f64.powi(-(n as i32)) * PI.powf((1.0 - n as f64) / 2.0)
}

fn check_alpha_n(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (1, 2)")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidParameter(format!("n = {n} must be 1, 2 or 3")));
    }
    Ok(())
}

fn f_val(alpha: f64, mu: f64, delta: f64, z: f64) -> Result<f64> {
    Ok(f_family(FFamilyParams::new(mu, delta, alpha / 2.0)?, z)?.value)
}

/// `c_n t^{δ−1} f(t^{−α/2} r; n−1, δ)` for arbitrary `δ`.
pub fn radial_kernel(alpha: f64, n: usize, delta: f64, t: f64, r: f64) -> Result<f64> {
    check_alpha_n(alpha, n)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel needs t > 0, got {t}")));
    }
    if r < 0.0 || (n >= 2 && r == 0.0) {
        return Err(Error::Domain(format!("radial argument r = {r} not admissible for n = {n}")));
    }
    let z = t.powf(-alpha / 2.0) * r;
    Ok(c_n(n) * t.powf(delta - 1.0) * f_val(alpha, (n - 1) as f64, delta, z)?)
}

/// `Γ_{α,n}(t, x)` with `r = |x|`.
pub fn gamma_kernel(alpha: f64, n: usize, t: f64, r: f64) -> Result<f64> {
    radial_kernel(alpha, n, KernelKind::Y.delta(alpha, n), t, r)
}

pub fn const_kernel(kind: KernelKind, alpha: f64, n: usize, t: f64, r: f64) -> Result<f64> {
    radial_kernel(alpha, n, kind.delta(alpha, n), t, r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub z1: f64,
    pub z2: f64,
    pub y: f64,
}

pub fn const_triple(alpha: f64, n: usize, t: f64, r: f64) -> Result<Triple> {
    Ok(Triple {
        z1: const_kernel(KernelKind::Z1, alpha, n, t, r)?,
        z2: const_kernel(KernelKind::Z2, alpha, n, t, r)?,
        y: const_kernel(KernelKind::Y, alpha, n, t, r)?,
    })
}

/// Coefficient field `η ↦ a(η)` with ellipticity constant `δ₀`.
#[derive(Clone)]
pub struct EllipticParamField {
    pub dim: usize,
    pub delta0: f64,
    a: Arc<dyn Fn(&[f64]) -> SymMat + Send + Sync>,
}

impl std::fmt::Debug for EllipticParamField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticParamField").field("dim", &self.dim).field("delta0", &self.delta0).finish()
    }
}

impl EllipticParamField {
    pub fn new(dim: usize, delta0: f64, a: impl Fn(&[f64]) -> SymMat + Send + Sync + 'static) -> Self {
        Self { dim, delta0, a: Arc::new(a) }
    }

    pub fn constant(a: SymMat, delta0: f64) -> Self {
        Self::new(a.n, delta0, move |_| a)
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(SymMat::identity(dim), 1.0)
    }

    pub fn a(&self, eta: &[f64]) -> SymMat {
        (self.a)(eta)
    }

    /// Freeze the coefficients at `η`; fails if `a(η)` is not elliptic with
    /// constant `δ₀` or is badly conditioned.
    pub fn freeze(&self, eta: &[f64]) -> Result<Frozen> {
        let a = self.a(eta);
        if a.n != self.dim {
            return Err(Error::InvalidParameter(format!("a(η) has size {} for dim {}", a.n, self.dim)));
        }
        if !a.is_elliptic(self.delta0) {
            return Err(Error::InvalidParameter(format!("a(η) at η = {eta:?} violates ellipticity with δ₀ = {}", self.delta0)));
        }
        Frozen::new(a)
    }
}

/// Coefficients frozen at a parameter point: `A = a⁻¹` and the prefactor
/// `det(a)^{−1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frozen {
    pub a: SymMat,
    pub inv: SymMat,
    pub prefactor: f64,
}

impl Frozen {
    pub fn new(a: SymMat) -> Result<Self> {
        let inv = a.inverse()?;
        let d = a.det();
        if !(d > 0.0) {
            return Err(Error::SingularMatrix(format!("det a = {d} is not positive")));
        }
        Ok(Self { a, inv, prefactor: 1.0 / d.sqrt() })
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    /// Frozen kernel or one of its derivatives at `(t, y)`.
    pub fn eval(&self, id: KernelId, alpha: f64, t: f64, y: &[f64]) -> Result<f64> {
        let n = self.n();
        check_alpha_n(alpha, n)?;
        if !(t > 0.0) {
            return Err(Error::Domain(format!("kernel needs t > 0, got {t}")));
        }
        let delta = id.which.delta(alpha, n);
        let s = self.inv.quad_form(y);
        let r = s.max(0.0).sqrt();
        if n >= 2 && r == 0.0 {
            return Err(Error::Domain("frozen kernel evaluated at y = 0 for n ≥ 2".into()));
        }
        let cn = c_n(n) * self.prefactor;
        let zt = t.powf(-alpha / 2.0);
        let z = zt * r;
        let mu = (n - 1) as f64;
        match id.deriv {
            Deriv::Value => Ok(cn * t.powf(delta - 1.0) * f_val(alpha, mu, delta, z)?),
            Deriv::Dt => Ok(cn * t.powf(delta - 2.0) * f_val(alpha, mu, delta - 1.0, z)?),
            Deriv::D1(i) if n == 1 => {
                // K(r) = c t^{δ−1} Φ(−β, δ, −t^{−β} r),  K' = −c t^{δ−1−β} Φ(−β, δ−β, −z)
                if y[0] == 0.0 {
                    return Err(Error::Domain("first derivative of a 1-D kernel at y = 0 (cusp)".into()));
                }
                let _ = i;
                let b = alpha / 2.0;
                let kp = -cn * t.powf(delta - 1.0) * zt * wright_phi(WrightParams::new(b, delta - b)?, -z)?.value;
                Ok(kp * y[0].signum() * self.inv.m[0][0].sqrt())
            }
            Deriv::D2(_, _) if n == 1 => {
                if y[0] == 0.0 {
                    return Err(Error::Domain("second derivative of a 1-D kernel at y = 0".into()));
                }
                let b = alpha / 2.0;
                let kpp = cn * t.powf(delta - 1.0) * zt * zt * wright_phi(WrightParams::new(b, delta - alpha)?, -z)?.value;
                Ok(kpp * self.inv.m[0][0])
            }
            Deriv::D1(i) => {
                let g1 = cn * t.powf(delta - 1.0 - alpha) * f_val(alpha, mu + 2.0, delta - alpha, z)?;
                let ay = self.inv.mul_vec(y);
                Ok(-0.5 * g1 * ay[i])
            }
            Deriv::D2(i, j) => {
                let g1 = cn * t.powf(delta - 1.0 - alpha) * f_val(alpha, mu + 2.0, delta - alpha, z)?;
                let g2 = cn * t.powf(delta - 1.0 - 2.0 * alpha) * f_val(alpha, mu + 4.0, delta - 2.0 * alpha, z)?;
                let ay = self.inv.mul_vec(y);
                Ok(0.25 * g2 * ay[i] * ay[j] - 0.5 * g1 * self.inv.m[i][j])
            }
        }
    }
}

/// `Z_k⁽⁰⁾(t, y; η)` / `Y⁽⁰⁾(t, y; η)` and derivatives.
pub fn frozen_kernel(field: &EllipticParamField, id: KernelId, alpha: f64, t: f64, y: &[f64], eta: &[f64]) -> Result<f64> {
    field.freeze(eta)?.eval(id, alpha, t, y)
}

/// `ρ_σ(t, x, ξ) = exp{−σ (t^{−α/2}|x−ξ|)^{2/(2−α)}}`.
pub fn rho(sigma: f64, alpha: f64, t: f64, x: &[f64], xi: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    (-sigma * (t.powf(-alpha / 2.0) * d).powf(2.0 / (2.0 - alpha))).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub kind: KernelKind,
    pub alpha: f64,
    pub n: usize,
    pub t: f64,
    pub computed: f64,
    pub target: f64,
    pub discrepancy: f64,
}

impl IdentityReport {
    pub fn relative(&self) -> f64 {
        self.discrepancy / self.target.abs()
    }
}

/// Numerically integrate the frozen kernel over ℝⁿ in polar coordinates
/// `y = r θ`: the radial integral runs over the scaled variable
/// `z = t^{−α/2} r (θᵀAθ)^{1/2}` with the tail cut where the decay envelope
/// drops below `tol`, and the angular integral is done by quadrature over the
/// sphere.
pub fn identity_check(field: &EllipticParamField, kind: KernelKind, alpha: f64, t: f64, eta: &[f64], tol: f64) -> Result<IdentityReport> {
    let radial = radial_integral(kind, alpha, field.dim, tol)?;
    identity_from_radial(field, kind, alpha, t, eta, radial)
}

/// `∫₀^∞ f(z; n−1, δ) z^{n−1} dz`, the part of the identity integral that
/// depends on neither `t` nor the coefficients.
pub fn radial_integral(kind: KernelKind, alpha: f64, n: usize, tol: f64) -> Result<f64> {
    check_alpha_n(alpha, n)?;
    let delta = kind.delta(alpha, n);
    let beta = alpha / 2.0;
    let mu = (n - 1) as f64;
    let sigma = wright_decay_rate(beta);
    let z_cut = ((-(tol * 1e-4).ln()).max(1.0) / sigma).powf(1.0 - beta) + 2.0;
    let inner = WrightConfig { tol: (1e-4 * tol).clamp(1e-12, 1e-6), ..WrightConfig::default() };
    let fp = FFamilyParams::new(mu, delta, beta)?;
    let q = integrate_adaptive(
        |z| {
            if z <= 0.0 {
                return if n == 1 { f_val(alpha, mu, delta, 0.0).unwrap_or(f64::NAN) } else { 0.0 };
            }
            f_family_with(fp, z, &inner).map(|v| v.value * z.powi(n as i32 - 1)).unwrap_or(f64::NAN)
        },
        0.0,
        z_cut,
        0.0,
        1e-2 * tol,
        2000,
    )?;
    Ok(q.value)
}

/// Completes [`identity_check`] from a precomputed [`radial_integral`].
pub fn identity_from_radial(field: &EllipticParamField, kind: KernelKind, alpha: f64, t: f64, eta: &[f64], radial: f64) -> Result<IdentityReport> {
    let n = field.dim;
    check_alpha_n(alpha, n)?;
    let fr = field.freeze(eta)?;
    let delta = kind.delta(alpha, n);
    let beta = alpha / 2.0;
    // ∫ over the sphere of (θᵀAθ)^{−n/2}
    let ang = |th: &[f64]| fr.inv.quad_form(th).powf(-(n as f64) / 2.0);
    let angular = match n {
        1 => ang(&[1.0]) + ang(&[-1.0]),
        2 => {
            let m = 256;
            (0..m)
                .map(|k| {
                    let p = 2.0 * PI * k as f64 / m as f64;
                    ang(&[p.cos(), p.sin()])
                })
                .sum::<f64>()
                * 2.0
                * PI
                / m as f64
        }
        _ => {
            let gl = GaussLegendre::new(48);
            let m = 96;
            let mut s = 0.0;
            for (c, w) in gl.mapped(-1.0, 1.0) {
                let sn = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let p = 2.0 * PI * k as f64 / m as f64;
                    s += w * ang(&[sn * p.cos(), sn * p.sin(), c]);
                }
            }
            s * 2.0 * PI / m as f64
        }
    };
    // r^{n−1} dr = t^{nβ} (θᵀAθ)^{−n/2} z^{n−1} dz
    let computed = fr.prefactor * c_n(n) * t.powf(delta - 1.0 + n as f64 * beta) * radial * angular;
    let target = kind.integral(alpha, t);
    Ok(IdentityReport { kind, alpha, n, t, computed, target, discrepancy: (computed - target).abs() })
}

/// Cubic Hermite table of `z ↦ Φ(−β, d, −z)` on `[0, z_max]`, zero beyond.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    h: f64,
    z_max: f64,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl ProfileTable {
    pub fn new(beta: f64, d: f64, z_max: f64, cells: usize) -> Result<Self> {
        let p = WrightParams::new(beta, d)?;
        let dp = WrightParams::new(beta, d - beta)?;
        let h = z_max / cells as f64;
        let mut vals = Vec::with_capacity(cells + 1);
        let mut ders = Vec::with_capacity(cells + 1);
        for k in 0..=cells {
            let z = k as f64 * h;
            vals.push(wright_phi(p, -z)?.value);
            ders.push(-wright_phi(dp, -z)?.value);
        }
        Ok(Self { h, z_max, vals, ders })
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        if z >= self.z_max {
            return 0.0;
        }
        let u = z / self.h;
        let k = u as usize;
        let s = u - k as f64;
        let (y0, y1) = (self.vals[k], self.vals[k + 1]);
        let (m0, m1) = (self.ders[k] * self.h, self.ders[k + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }
}

/// Fast one-dimensional frozen kernels backed by profile tables.
///
/// With `z = |y| t^{−β} a^{−1/2}` the kernel is
/// `a^{−1/2} t^{δ−1} Φ(−β, δ, −z) / 2`; derivatives use the shifted
/// profiles `δ−β`, `δ−2β` (space) and `δ−1` (time).
#[derive(Debug, Clone)]
pub struct Kernel1d {
    pub kind: KernelKind,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    tables: [ProfileTable; 4],
}

/// Argument beyond which every profile is below ~1e-18 of its scale.
pub fn profile_cutoff(beta: f64) -> f64 {
    1.2 * (42.0 / wright_decay_rate(beta)).powf(1.0 - beta) + 1.0
}

impl Kernel1d {
    pub fn new(kind: KernelKind, alpha: f64) -> Result<Self> {
        check_alpha_n(alpha, 1)?;
        let beta = alpha / 2.0;
        let delta = kind.delta(alpha, 1);
        let z_max = profile_cutoff(beta);
        let cells = 4000;
        let tables = [
            ProfileTable::new(beta, delta, z_max, cells)?,
            ProfileTable::new(beta, delta - beta, z_max, cells)?,
            ProfileTable::new(beta, delta - alpha, z_max, cells)?,
            ProfileTable::new(beta, delta - 1.0, z_max, cells)?,
        ];
        Ok(Self { kind, alpha, beta, delta, tables })
    }

    /// Support radius in `|y|` at time `t` for coefficient bound `a_max`.
    pub fn reach(&self, t: f64, a_max: f64) -> f64 {
        self.tables[0].z_max() * t.powf(self.beta) * a_max.sqrt()
    }

    /// Time factors for repeated evaluation at a fixed `t`.
    #[inline]
    pub fn at(&self, t: f64) -> TimeFactors {
        TimeFactors { tb: t.powf(-self.beta), base: 0.5 * t.powf(self.delta - 1.0), inv_t: 1.0 / t }
    }

    /// Kernel or derivative with the coefficient `a` frozen.
    #[inline]
    pub fn eval(&self, deriv: Deriv, t: f64, y: f64, a: f64) -> f64 {
        self.eval_at(deriv, &self.at(t), y, a)
    }

    #[inline]
    pub fn eval_at(&self, deriv: Deriv, tf: &TimeFactors, y: f64, a: f64) -> f64 {
        let ia = 1.0 / a;
        let sa = ia.sqrt();
        let z = y.abs() * tf.tb * sa;
        let base = tf.base * sa;
        match deriv {
            Deriv::Value => base * self.tables[0].eval(z),
            Deriv::D1(_) => {
                if y == 0.0 {
                    0.0
                } else {
                    -base * tf.tb * self.tables[1].eval(z) * y.signum() * sa
                }
            }
            Deriv::D2(_, _) => base * tf.tb * tf.tb * self.tables[2].eval(z) * ia,
            Deriv::Dt => base * tf.inv_t * self.tables[3].eval(z),
        }
    }

    /// `(a_x − a) K'' + b_x K' + c_x K` with `K` frozen at `a`.
    #[inline]
    pub fn operator_difference(&self, tf: &TimeFactors, y: f64, a: f64, coef_x: [f64; 3]) -> f64 {
        let da = coef_x[0] - a;
        let mut s = if da != 0.0 { da * self.eval_at(Deriv::D2(0, 0), tf, y, a) } else { 0.0 };
        if coef_x[1] != 0.0 {
            s += coef_x[1] * self.eval_at(Deriv::D1(0), tf, y, a);
        }
        if coef_x[2] != 0.0 {
            s += coef_x[2] * self.eval_at(Deriv::Value, tf, y, a);
        }
        s
    }
}

/// Powers of `t` shared by all evaluations of one kernel at a fixed time.
#[derive(Debug, Clone, Copy)]
pub struct TimeFactors {
    pub tb: f64,
    pub base: f64,
    pub inv_t: f64,
}
