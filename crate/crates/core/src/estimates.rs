//! Envelope checks of the kernel, source and correction bounds.
//!
//! Each case samples a quantity on a tensor grid in `(t, z)` with
//! `z = t^{-α/2}|x − ξ|`, divides by the algebraic part of its bound and
//! checks that the fitted ratio stays bounded when the grid is refined.

use crate::const_kernels::{const_kernel, Deriv, EllipticParamField, Frozen, KernelId, KernelKind};
use crate::envelope::{refine_geometric, refinement_check, EnvelopeReport, EnvelopeSample};
use crate::levi::{k_kernel, m_kernel, solve_volterra, EllipticOperator, LeviConfig};
use crate::linalg::SymMat;
use crate::quad::{geometric_grid, uniform_mesh};
use crate::Result;

const ALPHA: f64 = 1.5;
const GAMMA: f64 = 1.0;
const ALLOWED_GROWTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeCase {
    /// `|Z₁⁽⁰⁾| ≤ C t^{−α}|x−ξ|^{2−n}ρ_σ`, `n = 3`.
    Z1Spatial,
    /// `|Y⁽⁰⁾| ≤ C t^{α−αn/2−1}ρ_σ`, `n = 3`.
    YSpatial,
    /// `|Z₁⁽⁰⁾| ≤ C t^{−α/2}ρ_σ`, `n = 1`.
    Z1OneDim,
    /// Parameter difference of `Z₁⁽⁰⁾`, `n = 3`.
    Z1ParamDifference,
    /// `|M₁| ≤ C t^{−α}|x−ξ|^{−n+γ}ρ_σ`, `n = 3`.
    M1Spatial,
    /// `|K| ≤ C t^{−1}|x−ξ|^{−n+γ}ρ_σ`, `n = 3`.
    KSpatial,
    /// `|Q₁| ≤ C t^{−(3−γ)α/2}ρ_σ`, `n = 1`.
    Q1OneDim,
    /// `|K| ≤ C t^{−(1−γ)α/2−1}ρ_σ`, `n = 1`.
    KOneDim,
    /// `|V_Y| ≤ C t^{α−1+(γ−1)α/2}ρ_σ`, `n = 1`.
    VYOneDim,
}

impl EnvelopeCase {
    pub const ALL: [EnvelopeCase; 9] = [
        EnvelopeCase::Z1Spatial,
        EnvelopeCase::YSpatial,
        EnvelopeCase::Z1OneDim,
        EnvelopeCase::Z1ParamDifference,
        EnvelopeCase::M1Spatial,
        EnvelopeCase::KSpatial,
        EnvelopeCase::Q1OneDim,
        EnvelopeCase::KOneDim,
        EnvelopeCase::VYOneDim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvelopeCase::Z1Spatial => "Z1 n=3",
            EnvelopeCase::YSpatial => "Y n=3",
            EnvelopeCase::Z1OneDim => "Z1 n=1",
            EnvelopeCase::Z1ParamDifference => "Z1 parameter difference n=3",
            EnvelopeCase::M1Spatial => "M1 n=3",
            EnvelopeCase::KSpatial => "K n=3",
            EnvelopeCase::Q1OneDim => "Q1 n=1",
            EnvelopeCase::KOneDim => "K n=1",
            EnvelopeCase::VYOneDim => "V_Y n=1",
        }
    }

    pub fn run(self) -> Result<EnvelopeReport> {
        let b = ALPHA / 2.0;
        let spatial_z = geometric_grid(0.02, 6.0, 49);
        let line_z = uniform_mesh(0.0, 6.0, 48);
        let wide_t = geometric_grid(0.05, 2.0, 9);
        let levi_t = geometric_grid(0.01, 0.25, 9);
        match self {
            EnvelopeCase::Z1Spatial => {
                let g = |t: f64, r: f64| const_kernel(KernelKind::Z1, ALPHA, 3, t, r);
                let p = |t: f64, r: f64| -ALPHA * t.ln() - r.ln();
                check(self, &wide_t, &spatial_z, true, g, p)
            }
            EnvelopeCase::YSpatial => {
                let g = |t: f64, r: f64| const_kernel(KernelKind::Y, ALPHA, 3, t, r);
                let p = |t: f64, _r: f64| (ALPHA - 1.5 * ALPHA - 1.0) * t.ln();
                check(self, &wide_t, &spatial_z, true, g, p)
            }
            EnvelopeCase::Z1OneDim => {
                let g = |t: f64, r: f64| const_kernel(KernelKind::Z1, ALPHA, 1, t, r);
                let p = |t: f64, _r: f64| -b * t.ln();
                check(self, &wide_t, &line_z, false, g, p)
            }
            EnvelopeCase::Z1ParamDifference => {
                let field = EllipticParamField::new(3, 0.5, |x| SymMat::scalar(3, 1.0 + 0.1 * x[0].sin()));
                let (e1, e2) = ([0.0; 3], [0.4, 0.0, 0.0]);
                let f1 = field.freeze(&e1)?;
                let f2 = field.freeze(&e2)?;
                let d = (0.4f64).powf(GAMMA);
                let id = KernelId::value(KernelKind::Z1);
                let g = move |t: f64, r: f64| {
                    let y = direction(r);
                    Ok(eval_diff(&f1, &f2, id, t, &y)?.abs())
                };
                let p = move |t: f64, r: f64| d.ln() - ALPHA * t.ln() - r.ln();
                check(self, &wide_t, &spatial_z, true, g, p)
            }
            EnvelopeCase::M1Spatial | EnvelopeCase::KSpatial => {
                let op = spatial_operator()?;
                let xi = [0.3, -0.2, 0.1];
                let is_m = self == EnvelopeCase::M1Spatial;
                let g = move |t: f64, r: f64| {
                    let d = direction(r);
                    let x = [xi[0] + d[0], xi[1] + d[1], xi[2] + d[2]];
                    if is_m {
                        m_kernel(&op, 1, ALPHA, t, &x, &xi)
                    } else {
                        k_kernel(&op, ALPHA, t, &x, &xi)
                    }
                };
                let tp = if is_m { -ALPHA } else { -1.0 };
                let p = move |t: f64, r: f64| tp * t.ln() + (GAMMA - 3.0) * r.ln();
                check(self, &wide_t, &spatial_z, true, g, p)
            }
            EnvelopeCase::KOneDim => {
                let op = line_operator()?;
                let g = |t: f64, r: f64| k_kernel(&op, ALPHA, t, &[0.2 + r], &[0.2]);
                let p = |t: f64, _r: f64| (-(1.0 - GAMMA) * b - 1.0) * t.ln();
                check(self, &levi_t, &line_z, false, g, p)
            }
            EnvelopeCase::Q1OneDim | EnvelopeCase::VYOneDim => {
                let op = line_operator()?;
                let cfg = LeviConfig { t_end: 0.25, n_time: 12, n_space: 25, ..LeviConfig::default() };
                let xi = 0.2;
                if self == EnvelopeCase::Q1OneDim {
                    let (levi, ck) = solve_volterra(&op, KernelKind::Z1, ALPHA, &[xi], &cfg)?;
                    let g = |t: f64, r: f64| Ok(levi.q_value(&ck, t, xi + r));
                    let p = |t: f64, _r: f64| -(3.0 - GAMMA) * b * t.ln();
                    check(self, &levi_t, &line_z, false, g, p)
                } else {
                    let (levi, ck) = solve_volterra(&op, KernelKind::Y, ALPHA, &[xi], &cfg)?;
                    let g = |t: f64, r: f64| levi.correction(&ck, t, xi + r, Deriv::Value, &cfg);
                    let p = |t: f64, _r: f64| (ALPHA - 1.0 + (GAMMA - 1.0) * b) * t.ln();
                    check(self, &levi_t, &line_z, false, g, p)
                }
            }
        }
    }
}

/// Runs every case in order.
pub fn envelope_suite() -> Result<Vec<EnvelopeReport>> {
    EnvelopeCase::ALL.iter().map(|c| c.run()).collect()
}

fn spatial_operator() -> Result<EllipticOperator> {
    EllipticOperator::new(3, 0.8, GAMMA, 0.1, |x| SymMat::scalar(3, 1.0 + 0.1 * x[0].sin()))
}

fn line_operator() -> Result<EllipticOperator> {
    EllipticOperator::new(1, 0.8, GAMMA, 0.2, |x| SymMat::scalar(1, 1.0 + 0.2 * x[0].sin()))
}

fn direction(r: f64) -> [f64; 3] {
    let c = r / 3f64.sqrt();
    [c, c, c]
}

fn eval_diff(f1: &Frozen, f2: &Frozen, id: KernelId, t: f64, y: &[f64]) -> Result<f64> {
    Ok(f1.eval(id, ALPHA, t, y)? - f2.eval(id, ALPHA, t, y)?)
}

fn refine_uniform(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

fn samples(
    ts: &[f64],
    zs: &[f64],
    g: &impl Fn(f64, f64) -> Result<f64>,
    log_power: &impl Fn(f64, f64) -> f64,
) -> Result<Vec<EnvelopeSample>> {
    let expo = 1.0 / (1.0 - ALPHA / 2.0);
    let mut out = Vec::with_capacity(ts.len() * zs.len());
    for &t in ts {
        let tb = t.powf(ALPHA / 2.0);
        for &z in zs {
            let r = z * tb;
            let v = g(t, r)?.abs();
            out.push(EnvelopeSample { log_value: v.ln(), log_power: log_power(t, r), w: z.powf(expo) });
        }
    }
    Ok(out)
}

fn check(
    case: EnvelopeCase,
    ts: &[f64],
    zs: &[f64],
    geometric_z: bool,
    g: impl Fn(f64, f64) -> Result<f64>,
    log_power: impl Fn(f64, f64) -> f64,
) -> Result<EnvelopeReport> {
    let coarse = samples(ts, zs, &g, &log_power)?;
    let fine_z = if geometric_z { refine_geometric(zs) } else { refine_uniform(zs) };
    let fine = samples(&refine_geometric(ts), &fine_z, &g, &log_power)?;
    Ok(refinement_check(case.name(), &coarse, &fine, 1.0, ALLOWED_GROWTH))
}
