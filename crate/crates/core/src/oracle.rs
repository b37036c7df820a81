//! Independent finite-difference solver for one-dimensional problems.
//!
//! The Caputo derivative is written as `I^{2−α}u''`; `u''` is taken piecewise
//! constant between the staggered first differences and integrated exactly
//! against the kernel (the L1 scheme for `∂_t u`, order `3 − α`). The spatial
//! operator uses centred differences and Crank-Nicolson averaging; each step
//! is a tridiagonal solve. Far boundaries carry the spatially homogeneous
//! solution built from the local data (zero for decaying data).

use crate::cauchy::{CauchyProblem, Provenance, SolutionField};
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::quad::GaussLegendre;

/// Uniform space-time grid on `[x_lo, x_hi] × [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FDGrid {
    pub dt: f64,
    pub dx: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl FDGrid {
    pub fn new(dt: f64, dx: f64, x_lo: f64, x_hi: f64) -> Result<Self> {
        if !(dt > 0.0 && dx > 0.0 && x_hi - x_lo > 4.0 * dx) {
            return Err(Error::Grid(format!("invalid grid dt={dt} dx={dx} on [{x_lo}, {x_hi}]")));
        }
        Ok(Self { dt, dx, x_lo, x_hi })
    }

    /// Grid whose boundaries lie `6 T^{α/2} √a_max` beyond `[lo, hi]`.
    pub fn around(problem: &CauchyProblem, lo: f64, hi: f64, dt: f64, dx: f64) -> Result<Self> {
        let mut pad = 0.0;
        let mut a_max = problem.op.a_max_1d(lo, hi);
        for _ in 0..3 {
            pad = 6.0 * problem.t_end.powf(problem.alpha / 2.0) * a_max.sqrt();
            a_max = problem.op.a_max_1d(lo - pad, hi + pad);
        }
        Self::new(dt, dx, lo - pad, hi + pad)
    }

    pub fn nx(&self) -> usize {
        ((self.x_hi - self.x_lo) / self.dx).round() as usize + 1
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + self.dx * i as f64
    }

    /// Same resolution, twice the padding on each side.
    pub fn doubled(&self) -> Self {
        let shift = ((self.x_hi - self.x_lo) / (2.0 * self.dx)).ceil() * self.dx;
        Self { x_lo: self.x_lo - shift, x_hi: self.x_hi + shift, ..self.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct FdSolution {
    /// All time levels (including `t = 0`) on all grid points.
    pub field: SolutionField,
    pub warnings: Vec<String>,
}

/// `u` at the boundary: `u₀ + t u₁ + I^α f` with data frozen at `x`.
fn boundary_value(p: &CauchyProblem, gl: &GaussLegendre, t: f64, x: f64) -> f64 {
    let mut v = p.u0.as_ref().map_or(0.0, |g| g(&[x])) + t * p.u1.as_ref().map_or(0.0, |g| g(&[x]));
    if let (Some(f), true) = (&p.f, t > 0.0) {
        // ∫₀^t (t−s)^{α−1} f(s) ds = (1/α) ∫₀^{t^α} f(t − w^{1/α}) dw
        let a = p.alpha;
        let i = gl.integrate(0.0, t.powf(a), |w| f(t - w.powf(1.0 / a), &[x]));
        v += i / (a * libm::tgamma(a));
    }
    v
}

/// Implicit finite-difference solve of a one-dimensional problem.
pub fn fd_solve_1d(problem: &CauchyProblem, grid: &FDGrid) -> Result<FdSolution> {
    if problem.dim() != 1 {
        return Err(Error::Unsupported(format!("finite differences are one-dimensional; got n = {}", problem.dim())));
    }
    let p = problem;
    let alpha = p.alpha;
    let nx = grid.nx();
    let nt = (p.t_end / grid.dt).round() as usize;
    if nt < 2 {
        return Err(Error::Grid(format!("only {nt} time steps")));
    }
    let tau = p.t_end / nt as f64;
    let dx2 = grid.dx * grid.dx;
    let xs: Vec<f64> = (0..nx).map(|i| grid.x(i)).collect();
    let a: Vec<f64> = xs.iter().map(|&x| p.op.a(&[x]).m[0][0]).collect();
    let b: Vec<f64> = xs.iter().map(|&x| p.op.b(&[x])[0]).collect();
    let c: Vec<f64> = xs.iter().map(|&x| p.op.c(&[x])).collect();
    let u1: Vec<f64> = xs.iter().map(|&x| p.u1.as_ref().map_or(0.0, |g| g(&[x]))).collect();
    let gl = GaussLegendre::new(16);

    // L1 weights b_k = (k+1)^{2−α} − k^{2−α}
    let bw: Vec<f64> = (0..nt).map(|k| ((k + 1) as f64).powf(2.0 - alpha) - (k as f64).powf(2.0 - alpha)).collect();
    let mu = tau.powf(1.0 - alpha) / libm::tgamma(3.0 - alpha);

    let apply_b = |u: &[f64], i: usize| a[i] * (u[i + 1] - 2.0 * u[i] + u[i - 1]) / dx2 + b[i] * (u[i + 1] - u[i - 1]) / (2.0 * grid.dx) + c[i] * u[i];

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(nt + 1);
    levels.push(xs.iter().map(|&x| p.u0.as_ref().map_or(0.0, |g| g(&[x]))).collect());
    // staggered first differences δ_t u^{k−1/2}, k = 1..n
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(nt);
    let in_norm = levels[0].iter().chain(&u1).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut warnings = Vec::new();

    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]);
    for n in 1..=nt {
        let t = n as f64 * tau;
        let tm = t - 0.5 * tau;
        let prev = &levels[n - 1];
        // D^α at t_{n−1/2}: μ [b₀ δu^{n−1/2} − Σ_{k=1}^{n−1} (b_{k−1} − b_k) δu^{n−k−1/2} − b_{n−1} u₁]
        for i in 1..nx - 1 {
            let mut hist = -bw[n - 1] * u1[i];
            for k in 1..n {
                hist -= (bw[k - 1] - bw[k]) * diffs[n - k - 1][i];
            }
            // μ b₀ (uⁿ − u^{n−1})/τ − ½𝓑uⁿ = ½𝓑u^{n−1} + f − μ hist
            let k0 = mu * bw[0] / tau;
            let ci = a[i] / dx2;
            let bi = b[i] / (2.0 * grid.dx);
            lower[i] = -0.5 * (ci - bi);
            upper[i] = -0.5 * (ci + bi);
            diag[i] = k0 - 0.5 * (-2.0 * ci + c[i]);
            let f = p.f.as_ref().map_or(0.0, |g| g(tm, &[xs[i]]));
            rhs[i] = k0 * prev[i] + 0.5 * apply_b(prev, i) + f - mu * hist;
        }
        for &i in &[0, nx - 1] {
            lower[i] = 0.0;
            upper[i] = 0.0;
            diag[i] = 1.0;
            rhs[i] = boundary_value(p, &gl, t, xs[i]);
        }
        let next = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolveFailure(format!("non-finite values at step {n}")));
        }
        let norm = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > 10.0 * in_norm && p.f.is_none() && warnings.is_empty() {
            warnings.push(format!("stability warning: solution norm {norm:.3e} exceeds 10x input norm {in_norm:.3e} at t = {t}"));
        }
        diffs.push(next.iter().zip(prev).map(|(u, v)| (u - v) / tau).collect());
        levels.push(next);
    }
    let times: Vec<f64> = (0..=nt).map(|n| n as f64 * tau).collect();
    let field = SolutionField {
        times,
        points: xs.iter().map(|&x| vec![x]).collect(),
        values: levels.concat(),
        dt_values: None,
        provenance: Provenance::default(),
    };
    Ok(FdSolution { field, warnings })
}

/// Maximum change on `[lo, hi]` when the padding of the grid is doubled.
pub fn boundary_influence(problem: &CauchyProblem, grid: &FDGrid, lo: f64, hi: f64) -> Result<f64> {
    let a = fd_solve_1d(problem, grid)?.field;
    let b = fd_solve_1d(problem, &grid.doubled())?.field;
    let last_a = a.times.len() - 1;
    let last_b = b.times.len() - 1;
    let mut m = 0.0f64;
    for (k, pnt) in a.points.iter().enumerate() {
        let x = pnt[0];
        if x < lo || x > hi {
            continue;
        }
        let v = interp_line(&b, last_b, x).unwrap_or(f64::NAN);
        m = m.max((a.value(last_a, k) - v).abs());
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Sup,
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub norm: Norm,
    /// Norm of the difference.
    pub absolute: f64,
    /// Same norm of the reference field on the overlap.
    pub reference: f64,
    pub points: usize,
}

impl Discrepancy {
    pub fn relative(&self) -> f64 {
        if self.reference > 0.0 {
            self.absolute / self.reference
        } else {
            self.absolute
        }
    }
}

fn interp_line(f: &SolutionField, i: usize, x: f64) -> Option<f64> {
    let xs: Vec<f64> = f.points.iter().map(|p| p[0]).collect();
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    if n == 1 {
        return Some(f.value(i, 0));
    }
    let k = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let th = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Some((1.0 - th) * f.value(i, k - 1) + th * f.value(i, k))
}

/// Bilinear interpolation of a one-dimensional field at `(t, x)`.
pub fn interpolate(f: &SolutionField, t: f64, x: f64) -> Option<f64> {
    let ts = &f.times;
    let n = ts.len();
    if n == 0 || t < ts[0] || t > ts[n - 1] {
        return None;
    }
    if n == 1 {
        return interp_line(f, 0, x);
    }
    let j = ts.partition_point(|&v| v <= t).clamp(1, n - 1);
    let th = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    Some((1.0 - th) * interp_line(f, j - 1, x)? + th * interp_line(f, j, x)?)
}

/// Norm of `a − b` over the lattice of `a`, with `b` interpolated onto it.
/// `reference` is the same norm of `b` there.
pub fn compare(a: &SolutionField, b: &SolutionField, norm: Norm) -> Result<Discrepancy> {
    if a.points.iter().chain(&b.points).any(|p| p.len() != 1) {
        return Err(Error::Unsupported("comparison of one-dimensional fields only".into()));
    }
    let (mut diff, mut refn, mut count) = (0.0f64, 0.0f64, 0usize);
    for (i, &t) in a.times.iter().enumerate() {
        for (k, p) in a.points.iter().enumerate() {
            let Some(v) = interpolate(b, t, p[0]) else { continue };
            let d = a.value(i, k) - v;
            match norm {
                Norm::Sup => {
                    diff = diff.max(d.abs());
                    refn = refn.max(v.abs());
                }
                Norm::L2 => {
                    diff += d * d;
                    refn += v * v;
                }
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyOverlap);
    }
    if norm == Norm::L2 {
        diff = (diff / count as f64).sqrt();
        refn = (refn / count as f64).sqrt();
    }
    Ok(Discrepancy { norm, absolute: diff, reference: refn, points: count })
}
