//! Levi parametrix construction of the variable-coefficient kernels.
//!
//! Pointwise source kernels `M_l` and `K` are available in every supported
//! dimension. The Volterra equations are solved in one space dimension on a
//! self-similar lattice `y = ξ + λ^{α/2} z`; the unknown stored on the lattice
//! is the remainder `R = Q − M` scaled by `λ^{1−δ}`, which stays bounded as
//! `λ → 0`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::const_kernels::{profile_cutoff, Deriv, EllipticParamField, Frozen, Kernel1d, KernelId, KernelKind};
use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::quad::{graded_mesh, GaussLegendre};

type MatFn = Arc<dyn Fn(&[f64]) -> SymMat + Send + Sync>;
type VecFn = Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `𝓑u = Σ a_ij ∂_ij u + Σ b_j ∂_j u + c u`.
#[derive(Clone)]
pub struct EllipticOperator {
    pub dim: usize,
    pub delta0: f64,
    pub gamma: f64,
    pub holder_const: f64,
    a: MatFn,
    b: Option<VecFn>,
    c: Option<ScalarFn>,
}

impl std::fmt::Debug for EllipticOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticOperator")
            .field("dim", &self.dim)
            .field("delta0", &self.delta0)
            .field("gamma", &self.gamma)
            .field("has_b", &self.b.is_some())
            .field("has_c", &self.c.is_some())
            .finish()
    }
}

impl EllipticOperator {
    pub fn new(dim: usize, delta0: f64, gamma: f64, holder_const: f64, a: impl Fn(&[f64]) -> SymMat + Send + Sync + 'static) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim} not in 1..=3")));
        }
        if !(delta0 > 0.0) {
            return Err(Error::InvalidParameter(format!("ellipticity constant {delta0} must be positive")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidParameter(format!("Hölder exponent {gamma} not in (0, 1]")));
        }
        Ok(Self { dim, delta0, gamma, holder_const, a: Arc::new(a), b: None, c: None })
    }

    pub fn constant(a: SymMat, delta0: f64) -> Result<Self> {
        Self::new(a.n, delta0, 1.0, 0.0, move |_| a)
    }

    pub fn laplacian(dim: usize) -> Self {
        Self::constant(SymMat::identity(dim), 1.0).expect("identity is elliptic")
    }

    pub fn with_b(mut self, b: impl Fn(&[f64]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.b = Some(Arc::new(b));
        self
    }

    pub fn with_c(mut self, c: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.c = Some(Arc::new(c));
        self
    }

    /// Check the Hölder exponent against `2 − 2/α < γ`.
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if !(self.gamma > 2.0 - 2.0 / alpha) {
            return Err(Error::InvalidParameter(format!(
                "Hölder exponent {} must exceed 2 − 2/α = {}",
                self.gamma,
                2.0 - 2.0 / alpha
            )));
        }
        Ok(())
    }

    pub fn a(&self, x: &[f64]) -> SymMat {
        (self.a)(x)
    }

    pub fn b(&self, x: &[f64]) -> [f64; 3] {
        self.b.as_ref().map_or([0.0; 3], |b| b(x))
    }

    pub fn c(&self, x: &[f64]) -> f64 {
        self.c.as_ref().map_or(0.0, |c| c(x))
    }

    pub fn has_lower_order(&self) -> bool {
        self.b.is_some() || self.c.is_some()
    }

    pub fn field(&self) -> EllipticParamField {
        let a = self.a.clone();
        EllipticParamField::new(self.dim, self.delta0, move |x| a(x))
    }

    /// Upper bound of `a` sampled on `[lo, hi]` (one dimension).
    pub fn a_max_1d(&self, lo: f64, hi: f64) -> f64 {
        (0..=2000).map(|k| self.a(&[lo + (hi - lo) * k as f64 / 2000.0]).m[0][0]).fold(0.0, f64::max)
    }
}

/// Exponents `ν₁ ∈ (2 − 2/α, γ)` and `ν₀ = ν₁ − 2 + 2/α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuPair {
    pub nu1: f64,
    pub nu0: f64,
}

impl NuPair {
    pub fn midpoint(alpha: f64, gamma: f64) -> Result<Self> {
        let lo = 2.0 - 2.0 / alpha;
        if !(gamma > lo) {
            return Err(Error::InvalidParameter(format!("γ = {gamma} must exceed {lo}")));
        }
        let nu1 = 0.5 * (gamma + lo);
        Ok(Self { nu1, nu0: nu1 - lo })
    }

    /// Grading exponent `1/(ν₀α/2)` resolving the weight `λ^{ν₀α/2−1}`.
    pub fn grading(&self, alpha: f64) -> f64 {
        2.0 / (self.nu0 * alpha)
    }
}

/// `M_l` for `kind = Z1, Z2`, `K` for `kind = Y`: the operator difference
/// `𝓑_x − 𝓑_ξ⁽⁰⁾` applied to the kernel frozen at `ξ`.
pub fn source_kernel(op: &EllipticOperator, kind: KernelKind, alpha: f64, t: f64, x: &[f64], xi: &[f64]) -> Result<f64> {
    let n = op.dim;
    let fr = op.field().freeze(xi)?;
    let y: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
    let ax = op.a(x);
    let axi = fr.a;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = ax.m[i][j] - axi.m[i][j];
            if d != 0.0 {
                s += d * fr.eval(KernelId { which: kind, deriv: Deriv::D2(i, j) }, alpha, t, &y)?;
            }
        }
    }
    if let Some(b) = &op.b {
        let bv = b(x);
        for (j, &bj) in bv.iter().enumerate().take(n) {
            if bj != 0.0 {
                s += bj * fr.eval(KernelId { which: kind, deriv: Deriv::D1(j) }, alpha, t, &y)?;
            }
        }
    }
    if let Some(c) = &op.c {
        let cv = c(x);
        if cv != 0.0 {
            s += cv * fr.eval(KernelId::value(kind), alpha, t, &y)?;
        }
    }
    Ok(s)
}

/// `M_l(t, x; ξ)`, `l ∈ {1, 2}`.
pub fn m_kernel(op: &EllipticOperator, l: usize, alpha: f64, t: f64, x: &[f64], xi: &[f64]) -> Result<f64> {
    let kind = match l {
        1 => KernelKind::Z1,
        2 => KernelKind::Z2,
        _ => return Err(Error::InvalidParameter(format!("M_l needs l ∈ {{1, 2}}, got {l}"))),
    };
    source_kernel(op, kind, alpha, t, x, xi)
}

/// `K(t, x; ξ)`.
pub fn k_kernel(op: &EllipticOperator, alpha: f64, t: f64, x: &[f64], xi: &[f64]) -> Result<f64> {
    source_kernel(op, KernelKind::Y, alpha, t, x, xi)
}

/// Discretisation parameters for the one-dimensional Levi solver.
#[derive(Debug, Clone, PartialEq)]
pub struct LeviConfig {
    pub t_end: f64,
    pub n_time: usize,
    /// Time grading exponent; `None` uses `1/(ν₀α/2)` capped at `max_grading`.
    pub grading: Option<f64>,
    pub max_grading: f64,
    /// Odd number of similarity nodes `z` (so that `z = 0` is a node).
    pub n_space: usize,
    pub gl_order: usize,
    /// Subdivisions of each lattice cell used by the quadrature.
    pub sub: usize,
    /// Geometric refinement levels at singular time endpoints.
    pub levels: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LeviConfig {
    fn default() -> Self {
        Self { t_end: 0.25, n_time: 24, grading: None, max_grading: 3.0, n_space: 49, gl_order: 5, sub: 2, levels: 16, tol: 1e-10, max_iter: 60 }
    }
}

impl LeviConfig {
    pub fn grading_for(&self, alpha: f64, gamma: f64) -> Result<f64> {
        match self.grading {
            Some(q) => Ok(q),
            None => Ok(NuPair::midpoint(alpha, gamma)?.grading(alpha).min(self.max_grading)),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || self.n_time < 2 || self.n_space < 3 || self.n_space % 2 == 0 || self.gl_order < 2 || self.sub == 0 {
            return Err(Error::Grid(format!("invalid Levi grid {self:?}")));
        }
        Ok(())
    }
}

/// Gauss points on `[0, t]` for an integrand with power behaviour `λ^{e0}`
/// at `λ → 0` and `(t−λ)^{e1}` at `λ → t`. Interior breakpoints are
/// honoured; the end panels are refined geometrically and their innermost
/// piece is integrated after the substitution that makes the power exact.
pub fn time_points(t: f64, breaks: &[f64], e0: f64, e1: f64, gl: &GaussLegendre, sub: usize, levels: usize) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = vec![0.0];
    pts.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < t));
    pts.push(t);
    if pts.len() == 2 {
        pts.insert(1, 0.5 * t);
    }
    let np = pts.len() - 1;
    let mut out = Vec::with_capacity((np * sub + 2 * levels + 2) * gl.len());
    let push_gl = |out: &mut Vec<(f64, f64)>, a: f64, b: f64| {
        for (x, w) in gl.mapped(a, b) {
            out.push((x, w));
        }
    };
    // near λ = 0
    {
        let b = pts[1];
        let mut hi = b;
        for _ in 0..levels {
            let lo = 0.5 * hi;
            push_gl(&mut out, lo, hi);
            hi = lo;
        }
        power_panel(&mut out, gl, hi, e0, |u| u, 1.0);
    }
    for p in 1..np - 1 {
        let (a, b) = (pts[p], pts[p + 1]);
        for k in 0..sub {
            push_gl(&mut out, a + (b - a) * k as f64 / sub as f64, a + (b - a) * (k + 1) as f64 / sub as f64);
        }
    }
    // near λ = t, in s = t − λ
    {
        let a = pts[np - 1];
        let mut hi = t - a;
        for _ in 0..levels {
            let lo = 0.5 * hi;
            push_gl(&mut out, t - hi, t - lo);
            hi = lo;
        }
        power_panel(&mut out, gl, hi, e1, |u| t - u, 1.0);
    }
    out
}

fn power_panel(out: &mut Vec<(f64, f64)>, gl: &GaussLegendre, eps: f64, e: f64, map: impl Fn(f64) -> f64, _sign: f64) {
    let p = if e < 0.0 { (1.0 / (1.0 + e)).min(20.0) } else { 1.0 };
    for (u, w) in gl.mapped(0.0, 1.0) {
        let x = eps * u.powf(p);
        out.push((map(x), w * eps * p * u.powf(p - 1.0)));
    }
}

/// Gauss points on `[lo, hi]` with the given sorted knots plus a geometric
/// cluster around `x` at scale `h`.
pub fn space_points(lo: f64, hi: f64, knots: &[f64], x: f64, h: f64, gl: &GaussLegendre, out: &mut Vec<(f64, f64)>) {
    out.clear();
    if !(hi > lo) {
        return;
    }
    let mut br: Vec<f64> = Vec::with_capacity(knots.len() + 12);
    br.push(lo);
    br.extend(knots.iter().copied().filter(|&k| k > lo && k < hi));
    if x > lo && x < hi {
        br.push(x);
    }
    let mut r = h / 8.0;
    for _ in 0..7 {
        for c in [x - r, x + r] {
            if c > lo && c < hi {
                br.push(c);
            }
        }
        r *= 2.0;
    }
    br.push(hi);
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in br.windows(2) {
        if w[1] > w[0] {
            for (y, wy) in gl.mapped(w[0], w[1]) {
                out.push((y, wy));
            }
        }
    }
}

/// Fast one-dimensional kernels of an operator with `n = 1`.
#[derive(Debug, Clone)]
pub struct Levi1d {
    pub op: EllipticOperator,
    pub alpha: f64,
    pub beta: f64,
    pub kernels: [Kernel1d; 3],
    pub a_max: f64,
}

fn idx(kind: KernelKind) -> usize {
    match kind {
        KernelKind::Z1 => 0,
        KernelKind::Z2 => 1,
        KernelKind::Y => 2,
    }
}

impl Levi1d {
    /// Tables for all three kernels; `a_max` bounds `a` on the region of
    /// interest.
    pub fn new(op: EllipticOperator, alpha: f64, a_max: f64) -> Result<Self> {
        if op.dim != 1 {
            return Err(Error::Unsupported(format!("Volterra solver is one-dimensional; got n = {}", op.dim)));
        }
        op.validate(alpha)?;
        let kernels = [Kernel1d::new(KernelKind::Z1, alpha)?, Kernel1d::new(KernelKind::Z2, alpha)?, Kernel1d::new(KernelKind::Y, alpha)?];
        Ok(Self { op, alpha, beta: alpha / 2.0, kernels, a_max })
    }

    #[inline]
    pub fn a(&self, x: f64) -> f64 {
        self.op.a(&[x]).m[0][0]
    }

    /// `[a(x), b(x), c(x)]`.
    #[inline]
    pub fn coef(&self, x: f64) -> [f64; 3] {
        let a = self.a(x);
        if self.op.has_lower_order() {
            [a, self.op.b(&[x])[0], self.op.c(&[x])]
        } else {
            [a, 0.0, 0.0]
        }
    }

    pub fn kernel(&self, kind: KernelKind) -> &Kernel1d {
        &self.kernels[idx(kind)]
    }

    /// Frozen kernel `K(t, y; η)`.
    #[inline]
    pub fn frozen(&self, kind: KernelKind, deriv: Deriv, t: f64, y: f64, eta: f64) -> f64 {
        self.kernels[idx(kind)].eval(deriv, t, y, self.a(eta))
    }

    /// Source kernel (M₁, M₂ or K) at `(t, x; ξ)`.
    #[inline]
    pub fn source(&self, kind: KernelKind, t: f64, x: f64, xi: f64) -> f64 {
        let k = &self.kernels[idx(kind)];
        k.operator_difference(&k.at(t), x - xi, self.a(xi), self.coef(x))
    }

    /// Reach of `K(s, x; ·)` and `Y⁽⁰⁾(s, x − ·; ·)` in `y`.
    pub fn reach(&self, s: f64) -> f64 {
        self.kernels[2].reach(s, self.a_max)
    }

    /// Radius in `z` of the similarity lattice.
    pub fn z_cut(&self) -> f64 {
        profile_cutoff(self.beta) * self.a_max.sqrt()
    }

    /// Solve the Levi equation for the kernel `kind` with pole `ξ`.
    pub fn solve(&self, kind: KernelKind, xi: f64, cfg: &LeviConfig) -> Result<CorrectedKernel> {
        cfg.validate()?;
        let q = cfg.grading_for(self.alpha, self.op.gamma)?;
        let times: Vec<f64> = graded_mesh(cfg.t_end, cfg.n_time, q)[1..].to_vec();
        let zc = self.z_cut();
        let z: Vec<f64> = (0..cfg.n_space).map(|k| -zc + 2.0 * zc * k as f64 / (cfg.n_space - 1) as f64).collect();
        let mut ck = CorrectedKernel {
            kind,
            xi,
            a_xi: self.a(xi),
            delta: self.kernel(kind).delta,
            beta: self.beta,
            times,
            z,
            scaled: Vec::new(),
            first_term: Vec::new(),
            iterations: 0,
            increment_ratios: Vec::new(),
            residual_norm: 0.0,
        };
        let nz = ck.z.len();
        let nn = ck.times.len() * nz;
        let gl = GaussLegendre::new(cfg.gl_order);
        let rows: Vec<(f64, Vec<f64>)> = (0..nn).into_par_iter().map(|node| self.assemble_row(&ck, node, cfg, &gl)).collect();
        let mut b = vec![0.0; nn];
        let mut mat = vec![0.0; nn * nn];
        for (node, (km, row)) in rows.into_iter().enumerate() {
            let ti = ck.times[node / nz];
            b[node] = ti.powf(1.0 - ck.delta) * km;
            ck.first_term.push(km);
            mat[node * nn..(node + 1) * nn].copy_from_slice(&row);
        }
        let (p, iters, ratios, res) = neumann(&mat, &b, cfg.tol, cfg.max_iter)?;
        ck.scaled = p;
        ck.iterations = iters;
        ck.increment_ratios = ratios;
        ck.residual_norm = res;
        Ok(ck)
    }

    /// `(K∗M)` at a lattice node and the matrix row of `K∗R` acting on the
    /// scaled unknowns.
    fn assemble_row(&self, ck: &CorrectedKernel, node: usize, cfg: &LeviConfig, gl: &GaussLegendre) -> (f64, Vec<f64>) {
        let nz = ck.z.len();
        let nn = ck.times.len() * nz;
        let (i, k) = (node / nz, node % nz);
        let (t, x) = ck.node(i, k);
        let mut row = vec![0.0; nn];
        let e0 = ck.delta - 1.0;
        let e1 = self.op.gamma * self.beta - 1.0;
        let tp = time_points(t, &ck.times[..i], e0, e1, gl, cfg.sub, cfg.levels);
        let ky = self.kernel(KernelKind::Y);
        let ks = self.kernel(ck.kind);
        let coef_x = self.coef(x);
        let mut km = 0.0;
        let (mut sp, mut knots) = (Vec::new(), Vec::new());
        let scale_t = t.powf(1.0 - ck.delta);
        for &(lam, wl) in &tp {
            let s = t - lam;
            if !(s > 0.0 && lam > 0.0) {
                continue;
            }
            let lb = lam.powf(self.beta);
            let (lo, hi) = ck.support(lam, x, self.reach(s));
            if !(hi > lo) {
                continue;
            }
            ck.knots(lam, cfg.sub, &mut knots);
            space_points(lo, hi, &knots, x, s.powf(self.beta) * self.a_max.sqrt(), gl, &mut sp);
            let (j, theta) = ck.time_cell(lam);
            let (j0, j1) = if j == 0 { (0, 0) } else { (j - 1, j) };
            let (w0, w1) = if j == 0 { (0.0, 1.0) } else { (1.0 - theta, theta) };
            let rscale = lam.powf(ck.delta - 1.0) * scale_t;
            let fy = ky.at(s);
            let fs = ks.at(lam);
            for &(y, wy) in &sp {
                let cy = self.coef(y);
                let kv = ky.operator_difference(&fy, x - y, cy[0], coef_x);
                if kv == 0.0 {
                    continue;
                }
                let w = wl * wy * kv;
                km += w * ks.operator_difference(&fs, y - ck.xi, ck.a_xi, cy);
                if let Some((l, phi)) = ck.z_cell((y - ck.xi) / lb) {
                    let c = w * rscale;
                    row[j0 * nz + l] += c * w0 * (1.0 - phi);
                    row[j0 * nz + l + 1] += c * w0 * phi;
                    row[j1 * nz + l] += c * w1 * (1.0 - phi);
                    row[j1 * nz + l + 1] += c * w1 * phi;
                }
            }
        }
        (km, row)
    }

    /// Corrected kernel `Z_l` (or `Y`) at `(t, x)`: the frozen kernel plus
    /// `∫₀^t ∫ Y⁽⁰⁾(t−λ, x−y; y) Q(λ, y) dy dλ`.
    pub fn assemble(&self, ck: &CorrectedKernel, t: f64, x: f64, cfg: &LeviConfig) -> Result<f64> {
        Ok(self.frozen(ck.kind, Deriv::Value, t, x - ck.xi, ck.xi) + self.correction(ck, t, x, Deriv::Value, cfg)?)
    }

    /// `∂_t` of the corrected kernel.
    pub fn assemble_dt(&self, ck: &CorrectedKernel, t: f64, x: f64, cfg: &LeviConfig) -> Result<f64> {
        Ok(self.frozen(ck.kind, Deriv::Dt, t, x - ck.xi, ck.xi) + self.correction(ck, t, x, Deriv::Dt, cfg)?)
    }

    /// The correction `V` (`deriv = Value`) or `∂_t V` (`deriv = Dt`).
    pub fn correction(&self, ck: &CorrectedKernel, t: f64, x: f64, deriv: Deriv, cfg: &LeviConfig) -> Result<f64> {
        if t > *ck.times.last().unwrap() * (1.0 + 1e-12) {
            return Err(Error::Coverage(format!("t = {t} beyond tabulated horizon {}", ck.times.last().unwrap())));
        }
        let gl = GaussLegendre::new(cfg.gl_order);
        let e0 = ck.delta - 1.0;
        let e1 = if deriv == Deriv::Dt { self.alpha - 2.0 } else { self.alpha - 1.0 };
        let n_before = ck.times.partition_point(|&tj| tj < t);
        let tp = time_points(t, &ck.times[..n_before], e0, e1, &gl, cfg.sub, cfg.levels);
        let ky = self.kernel(KernelKind::Y);
        let ks = self.kernel(ck.kind);
        let (mut sp, mut knots) = (Vec::new(), Vec::new());
        let mut v = 0.0;
        for &(lam, wl) in &tp {
            let s = t - lam;
            if !(s > 0.0 && lam > 0.0) {
                continue;
            }
            let (lo, hi) = ck.support(lam, x, self.reach(s));
            if !(hi > lo) {
                continue;
            }
            ck.knots(lam, cfg.sub, &mut knots);
            space_points(lo, hi, &knots, x, s.powf(self.beta) * self.a_max.sqrt(), &gl, &mut sp);
            let fy = ky.at(s);
            let fs = ks.at(lam);
            let interp = ck.interpolator(lam);
            for &(y, wy) in &sp {
                let cy = self.coef(y);
                let yv = ky.eval_at(deriv, &fy, x - y, cy[0]);
                if yv == 0.0 {
                    continue;
                }
                let q = ks.operator_difference(&fs, y - ck.xi, ck.a_xi, cy) + interp.eval(ck, y);
                v += wl * wy * yv * q;
            }
        }
        Ok(v)
    }

    /// `Q = M + R` at `(λ, y)`.
    pub fn q_value(&self, ck: &CorrectedKernel, lam: f64, y: f64) -> f64 {
        self.source(ck.kind, lam, y, ck.xi) + ck.remainder(lam, y)
    }
}

/// Interpolation data of the remainder at a fixed `λ`.
#[derive(Debug, Clone, Copy)]
pub struct Interpolator {
    j0: usize,
    j1: usize,
    w0: f64,
    w1: f64,
    lb: f64,
    scale: f64,
}

impl Interpolator {
    #[inline]
    pub fn eval(&self, ck: &CorrectedKernel, y: f64) -> f64 {
        if ck.scaled.is_empty() {
            return 0.0;
        }
        let Some((l, phi)) = ck.z_cell((y - ck.xi) / self.lb) else { return 0.0 };
        let nz = ck.z.len();
        let at = |jj: usize| (1.0 - phi) * ck.scaled[jj * nz + l] + phi * ck.scaled[jj * nz + l + 1];
        self.scale * (self.w0 * at(self.j0) + self.w1 * at(self.j1))
    }
}

/// Tabulated solution of one Levi equation.
#[derive(Debug, Clone)]
pub struct CorrectedKernel {
    pub kind: KernelKind,
    pub xi: f64,
    pub a_xi: f64,
    pub delta: f64,
    pub beta: f64,
    /// Time nodes `t_1 < … < t_N = T`.
    pub times: Vec<f64>,
    /// Similarity nodes `z`.
    pub z: Vec<f64>,
    /// `λ^{1−δ} R(λ, ξ + λ^{α/2} z)` on the lattice, row-major in time.
    pub scaled: Vec<f64>,
    /// `(K∗M)` at the lattice nodes (the first Neumann correction).
    pub first_term: Vec<f64>,
    pub iterations: usize,
    pub increment_ratios: Vec<f64>,
    /// Norm of the last increment relative to the accumulated sum.
    pub residual_norm: f64,
}

impl CorrectedKernel {
    /// Lattice node `(t, x)`.
    pub fn node(&self, i: usize, k: usize) -> (f64, f64) {
        let t = self.times[i];
        (t, self.xi + t.powf(self.beta) * self.z[k])
    }

    fn z_cut(&self) -> f64 {
        *self.z.last().unwrap()
    }

    fn support(&self, lam: f64, x: f64, reach: f64) -> (f64, f64) {
        let r = self.z_cut() * lam.powf(self.beta);
        ((self.xi - r).max(x - reach), (self.xi + r).min(x + reach))
    }

    fn knots(&self, lam: f64, sub: usize, out: &mut Vec<f64>) {
        out.clear();
        let lb = lam.powf(self.beta);
        let dz = self.z[1] - self.z[0];
        for (k, &zk) in self.z.iter().enumerate() {
            out.push(self.xi + lb * zk);
            if k + 1 < self.z.len() {
                for m in 1..sub {
                    out.push(self.xi + lb * (zk + dz * m as f64 / sub as f64));
                }
            }
        }
    }

    /// Cell `j` (0 for `λ < t_1`) and linear weight of `t_j`.
    fn time_cell(&self, lam: f64) -> (usize, f64) {
        if lam <= self.times[0] {
            return (0, 1.0);
        }
        let j = self.times.partition_point(|&tj| tj < lam).min(self.times.len() - 1);
        let (a, b) = (self.times[j - 1], self.times[j]);
        (j, ((lam - a) / (b - a)).clamp(0.0, 1.0))
    }

    fn z_cell(&self, z: f64) -> Option<(usize, f64)> {
        let z0 = self.z[0];
        let dz = self.z[1] - self.z[0];
        let u = (z - z0) / dz;
        if u < 0.0 || u > (self.z.len() - 1) as f64 {
            return None;
        }
        let l = (u as usize).min(self.z.len() - 2);
        Some((l, u - l as f64))
    }

    pub fn interpolator(&self, lam: f64) -> Interpolator {
        let (j, theta) = self.time_cell(lam);
        let (j0, j1) = if j == 0 { (0, 0) } else { (j - 1, j) };
        let (w0, w1) = if j == 0 { (0.0, 1.0) } else { (1.0 - theta, theta) };
        Interpolator { j0, j1, w0, w1, lb: lam.powf(self.beta), scale: lam.powf(self.delta - 1.0) }
    }

    /// Interpolated remainder `R(λ, y)`; zero outside the lattice radius.
    pub fn remainder(&self, lam: f64, y: f64) -> f64 {
        if !(lam > 0.0) {
            return 0.0;
        }
        self.interpolator(lam).eval(self, y)
    }
}

/// Neumann series `x = Σ_m Aᵐ b` for a dense row-major matrix.
pub fn neumann(mat: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, Vec<f64>, f64)> {
    let n = b.len();
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut sum = b.to_vec();
    let mut inc = b.to_vec();
    let mut ratios = Vec::new();
    let mut prev = norm(&inc);
    if prev == 0.0 {
        return Ok((sum, 0, ratios, 0.0));
    }
    for it in 1..=max_iter {
        let next: Vec<f64> = (0..n).map(|r| mat[r * n..(r + 1) * n].iter().zip(&inc).map(|(a, x)| a * x).sum()).collect();
        inc = next;
        for (s, d) in sum.iter_mut().zip(&inc) {
            *s += d;
        }
        let ni = norm(&inc);
        ratios.push(ni / prev);
        prev = ni;
        let rel = ni / norm(&sum).max(f64::MIN_POSITIVE);
        if !rel.is_finite() {
            return Err(Error::IterationBudgetExceeded { iterations: it, ratio: f64::INFINITY });
        }
        if rel <= tol {
            return Ok((sum, it, ratios, rel));
        }
    }
    Err(Error::IterationBudgetExceeded { iterations: max_iter, ratio: *ratios.last().unwrap_or(&f64::NAN) })
}

/// `solve_volterra` entry point: Neumann solution of the Levi equation for
/// `source ∈ {Z1 (M₁), Z2 (M₂), Y (K → Ψ)}` with pole `ξ`.
pub fn solve_volterra(op: &EllipticOperator, source: KernelKind, alpha: f64, xi: &[f64], cfg: &LeviConfig) -> Result<(Levi1d, CorrectedKernel)> {
    if op.dim != 1 {
        return Err(Error::Unsupported(format!("Volterra solver supports n = 1 only, got n = {}", op.dim)));
    }
    let reach = cfg.t_end.powf(alpha / 2.0) * 20.0;
    let a_max = op.a_max_1d(xi[0] - reach, xi[0] + reach) * 1.05;
    let levi = Levi1d::new(op.clone(), alpha, a_max)?;
    let ck = levi.solve(source, xi[0], cfg)?;
    Ok((levi, ck))
}

/// Corrected kernel value (frozen part plus correction).
pub fn assemble_corrected(levi: &Levi1d, ck: &CorrectedKernel, t: f64, x: &[f64], cfg: &LeviConfig) -> Result<f64> {
    levi.assemble(ck, t, x[0], cfg)
}

pub use crate::const_kernels::Frozen as FrozenCoefficients;

#[allow(dead_code)]
fn _assert_send_sync() {
    fn f<T: Send + Sync>() {}
    f::<EllipticOperator>();
    f::<Levi1d>();
    f::<Frozen>();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_pair_is_admissible() {
        let nu = NuPair::midpoint(1.5, 1.0).unwrap();
        assert!(nu.nu1 > 2.0 - 2.0 / 1.5 && nu.nu1 < 1.0);
        assert!(nu.nu0 > 0.0 && nu.nu0 < nu.nu1);
        assert!((nu.nu1 * 1.5 / 2.0 - 1.5 + 1.0 - nu.nu0 * 1.5 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn time_points_integrate_powers() {
        let gl = GaussLegendre::new(6);
        let t = 0.7;
        let pts = time_points(t, &[0.1, 0.3, 0.5], -0.75, -0.4, &gl, 2, 16);
        let v: f64 = pts.iter().map(|&(l, w)| w * l.powf(-0.75) * (t - l).powf(-0.4)).sum();
        let exact = t.powf(-0.15) * libm::tgamma(0.25) * libm::tgamma(0.6) / libm::tgamma(0.85);
        assert!((v - exact).abs() < 1e-8 * exact, "{v} vs {exact}");
    }

    #[test]
    fn neumann_matches_direct_solve() {
        let mat = vec![0.1, 0.2, -0.05, 0.3];
        let b = vec![1.0, 2.0];
        let (x, _, _, _) = neumann(&mat, &b, 1e-14, 200).unwrap();
        // (I − A) x = b
        assert!((x[0] - 0.1 * x[0] - 0.2 * x[1] - 1.0).abs() < 1e-12);
        assert!((x[1] + 0.05 * x[0] - 0.3 * x[1] - 2.0).abs() < 1e-12);
        assert!(matches!(neumann(&[2.0], &[1.0], 1e-12, 10), Err(Error::IterationBudgetExceeded { .. })));
    }
}
