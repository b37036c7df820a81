//! Batch commands behind the `fracwave` binary. Each command returns CSV
//! text, a plain-text summary and an exit code.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cauchy::{CauchyConfig, CauchySolver, SolutionField};
use crate::config::{anisotropic, ConfigError, RunConfig};
use crate::const_kernels::{identity_from_radial, radial_integral, EllipticParamField, Frozen, KernelId, KernelKind};
use crate::estimates::envelope_suite;
use crate::oracle::{compare, fd_solve_1d, interpolate, FDGrid, Norm};
use crate::quad::{integrate_adaptive, trapezoid_weights};
use crate::special_fn::{wright_decay_rate, wright_phi, WrightParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_TARGET: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Kernel,
    Solve,
    Verify,
    OracleCompare,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("evaluation error: {0}")]
    Eval(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Eval(_) => EXIT_EVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub summary: String,
    pub exit_code: i32,
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs a command. `tol` overrides the command's main tolerance.
pub fn run(cmd: Command, cfg: &RunConfig, tol: Option<f64>) -> CliResult<Outcome> {
    let mut cfg = cfg.clone();
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(ConfigError::Invalid { key: "--tol".into(), msg: format!("{t} must be positive") }.into());
        }
        let key = match cmd {
            Command::Kernel | Command::Verify => "verify.tol",
            Command::Solve => "solve.residual_target",
            Command::OracleCompare => "oracle.target",
        };
        cfg.set(key, &t.to_string());
    }
    match cmd {
        Command::Kernel => cmd_kernel(&cfg),
        Command::Solve => cmd_solve(&cfg),
        Command::Verify => cmd_verify(&cfg),
        Command::OracleCompare => cmd_oracle_compare(&cfg),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn coords(n: usize) -> Vec<String> {
    if n == 1 {
        vec!["x".into()]
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_kernel(cfg: &RunConfig) -> CliResult<Outcome> {
    let (alpha, n) = (cfg.alpha()?, cfg.dim()?);
    let tol = cfg.tolerance("verify.tol", 1e-6)?;
    let op = cfg.operator()?;
    let origin = vec![0.0; n];
    let fr = Frozen::new(op.a(&origin))?;
    let kinds = cfg.kernel_kinds()?;
    let (ts, pts) = (cfg.times()?, cfg.points()?);
    let mut jobs: Vec<(KernelKind, f64, &Vec<f64>)> = Vec::new();
    for &k in &kinds {
        for &t in &ts {
            jobs.extend(pts.iter().map(|p| (k, t, p)));
        }
    }
    let values: Vec<f64> = jobs.par_iter().map(|(k, t, p)| fr.eval(KernelId::value(*k), alpha, *t, p)).collect::<crate::Result<_>>()?;

    let mut header = vec!["t".to_string()];
    header.extend(coords(n));
    header.extend(["kernel_id".to_string(), "value".to_string()]);
    let rows: Vec<Vec<String>> = jobs
        .iter()
        .zip(&values)
        .map(|((k, t, p), v)| {
            let mut r = vec![num(*t)];
            r.extend(p.iter().map(|x| num(*x)));
            r.extend([k.name().to_string(), num(*v)]);
            r
        })
        .collect();

    let mut s = String::new();
    writeln!(s, "kernel: alpha={alpha} n={n} rows={}", rows.len()).ok();
    if n == 1 && pts.len() >= 3 {
        // trapezoid sums of the tabulated rows against the closed-form integrals
        let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let w = trapezoid_weights(&xs);
        for (ki, k) in kinds.iter().enumerate() {
            for (ti, &t) in ts.iter().enumerate() {
                let base = (ki * ts.len() + ti) * xs.len();
                let sum: f64 = w.iter().enumerate().map(|(j, wj)| wj * values[base + j]).sum();
                let target = k.integral(alpha, t);
                let rel = (sum - target).abs() / target.abs();
                writeln!(s, "integral {} t={t}: measured={sum:.12e} target={target:.12e} rel={rel:.3e} {}", k.name(), pass(rel <= tol)).ok();
            }
        }
    }
    Ok(Outcome { csv: write_csv(&header, &rows), summary: s, exit_code: EXIT_OK })
}

fn cauchy_config(cfg: &RunConfig) -> std::result::Result<CauchyConfig, ConfigError> {
    let d = CauchyConfig::default();
    Ok(CauchyConfig { n_time: cfg.usize_or("solve.n_time", d.n_time)?, dy: cfg.f64_or("solve.dy", d.dy)?, ..d })
}

fn span(pts: &[Vec<f64>]) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[0]), hi.max(p[0])))
}

pub fn cmd_solve(cfg: &RunConfig) -> CliResult<Outcome> {
    let problem = cfg.problem()?;
    let n = problem.dim();
    let (ts, pts) = (cfg.times()?, cfg.points()?);
    let target = cfg.tolerance("solve.residual_target", 1e-3)?;
    let probes = cfg.usize_or("solve.probes", if n == 1 { 3 } else { 0 })?;
    let trace = cfg.usize_or("solve.trace", 160)?;
    let h = cfg.f64_or("solve.h", 0.02)?;
    let initial = cfg.list("solve.initial_times")?.unwrap_or_else(|| vec![0.1, 0.05, 0.025]);
    let t_end = problem.t_end;
    let (lo, hi) = span(&pts);
    let solver = CauchySolver::new(problem, lo - 4.0 * h, hi + 4.0 * h, cauchy_config(cfg)?)?;
    let field = solver.solve(&ts, &pts, true)?;

    let mut header = vec!["t".to_string()];
    header.extend(coords(n));
    header.extend(["u".to_string(), "u_t".to_string()]);
    let mut rows = Vec::with_capacity(field.values.len());
    for (i, t) in field.times.iter().enumerate() {
        for (k, p) in field.points.iter().enumerate() {
            let mut r = vec![num(*t)];
            r.extend(p.iter().map(|x| num(*x)));
            r.extend([num(field.value(i, k)), num(field.dt_value(i, k).unwrap_or(f64::NAN))]);
            rows.push(r);
        }
    }

    let mut s = String::new();
    let pv = field.provenance;
    writeln!(s, "solve: n={n} times={} points={} max|u|={:.6e}", ts.len(), pts.len(), field.max_abs()).ok();
    writeln!(s, "provenance: z1={} z2={} y={} levi={}", pv.z1, pv.z2, pv.y, pv.levi).ok();
    let mut ok = true;
    if probes > 0 {
        let t = *ts.last().expect("non-empty grid");
        let m = probes.min(pts.len());
        let picks: Vec<&Vec<f64>> = (0..m).map(|j| &pts[if m == 1 { pts.len() / 2 } else { j * (pts.len() - 1) / (m - 1) }]).collect();
        let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
        for p in picks {
            let r = solver.residual(t, p, trace, h)?;
            let hit = r.residual.abs() <= target || r.relative <= target;
            ok &= hit;
            worst_abs = worst_abs.max(r.residual.abs());
            worst_rel = worst_rel.max(r.relative);
            writeln!(s, "residual t={t} x={:?}: abs={:.3e} rel={:.3e} {}", p, r.residual.abs(), r.relative, pass(hit)).ok();
        }
        writeln!(s, "residual summary: max_abs={worst_abs:.3e} max_rel={worst_rel:.3e} target={target:.1e} {}", pass(ok)).ok();
    }
    let its: Vec<f64> = initial.into_iter().filter(|t| *t > 0.0 && *t <= t_end).collect();
    if its.len() >= 2 {
        let rep = solver.initial_condition_report(&its, &pts)?;
        for (j, t) in rep.ts.iter().enumerate() {
            writeln!(s, "initial t={t}: |u-u0|={:.3e} |u_t-u1|={:.3e}", rep.u_gap[j], rep.ut_gap[j]).ok();
        }
        writeln!(s, "initial orders: u={:.3} u_t={:.3} monotone={}", rep.u_order, rep.ut_order, rep.monotone()).ok();
    }
    Ok(Outcome { csv: write_csv(&header, &rows), summary: s, exit_code: if ok { EXIT_OK } else { EXIT_TARGET } })
}

/// Result of one verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub target: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured <= self.target
    }
}

/// Integral identities on the full grid of orders, dimensions, times and
/// coefficient families.
pub fn identity_suite(tol: f64) -> crate::Result<Vec<Check>> {
    let mut radial = Vec::new();
    for alpha in [1.25, 1.5, 1.75] {
        for n in 1..=3 {
            for k in KernelKind::ALL {
                radial.push((alpha, n, k));
            }
        }
    }
    let values: Vec<f64> = radial.par_iter().map(|&(alpha, n, k)| radial_integral(k, alpha, n, tol)).collect::<crate::Result<_>>()?;
    let mut out = Vec::new();
    for (&(alpha, n, k), &r) in radial.iter().zip(&values) {
        for aniso in [false, true] {
            let field = if aniso { EllipticParamField::constant(anisotropic(n), 0.3) } else { EllipticParamField::identity(n) };
            let coef = if aniso { "anisotropic" } else { "identity" };
            for t in [0.25, 1.0, 2.0] {
                let rep = identity_from_radial(&field, k, alpha, t, &vec![0.0; n], r)?;
                out.push(Check { suite: "identities", name: format!("{} alpha={alpha} n={n} {coef} t={t}", k.name()), measured: rep.relative(), target: tol });
            }
        }
    }
    Ok(out)
}

/// Gaussian case of the Wright function and M-Wright moments.
pub fn special_suite() -> crate::Result<Vec<Check>> {
    let p = WrightParams::new(0.5, 0.5)?;
    let mut worst = 0.0f64;
    for j in 0..=1000 {
        let z = j as f64 / 100.0;
        let v = wright_phi(p, -z)?.value;
        worst = worst.max((v - (-z * z / 4.0).exp() / PI.sqrt()).abs());
    }
    let mut out = vec![Check { suite: "special", name: "Phi(-1/2,1/2,-z) Gaussian on [0,10]".into(), measured: worst, target: 1e-10 }];
    for beta in [0.625, 0.75, 0.875] {
        let mp = WrightParams::new(beta, 1.0 - beta)?;
        let u_max = (80.0 / wright_decay_rate(beta)).powf(1.0 - beta) + 5.0;
        for k in 0..=3 {
            let r = integrate_adaptive(|u| u.powi(k) * wright_phi(mp, -u).map_or(f64::NAN, |e| e.value), 0.0, u_max, 1e-13, 1e-12, 2000)?;
            let exact = libm::tgamma(k as f64 + 1.0) / libm::tgamma(beta * k as f64 + 1.0);
            out.push(Check { suite: "special", name: format!("M-Wright moment beta={beta} k={k}"), measured: (r.value - exact).abs() / exact.max(1.0), target: 1e-8 });
        }
    }
    Ok(out)
}

pub fn envelope_checks() -> crate::Result<Vec<Check>> {
    Ok(envelope_suite()?
        .into_iter()
        .map(|r| Check { suite: "envelope", name: r.name.clone(), measured: if r.passed() { r.growth.max(0.0) } else { f64::INFINITY }, target: r.allowed_growth })
        .collect())
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let tol = cfg.tolerance("verify.tol", 1e-6)?;
    let suites = cfg.words("verify.suites").unwrap_or_else(|| vec!["identities".into(), "special".into(), "envelope".into()]);
    let mut checks = Vec::new();
    for s in &suites {
        checks.extend(match s.as_str() {
            "identities" => identity_suite(tol)?,
            "special" => special_suite()?,
            "envelope" => envelope_checks()?,
            other => {
                return Err(ConfigError::Invalid { key: "verify.suites".into(), msg: format!("unknown suite `{other}` (identities, special, envelope)") }.into())
            }
        });
    }
    let header: Vec<String> = ["suite", "check", "measured", "target", "status"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = checks.iter().map(|c| vec![c.suite.to_string(), c.name.clone(), num(c.measured), num(c.target), pass(c.passed()).to_string()]).collect();
    let mut s = String::new();
    for c in &checks {
        writeln!(s, "{} {}: measured={:.3e} target={:.1e} {}", c.suite, c.name, c.measured, c.target, pass(c.passed())).ok();
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(s, "verify: {} checks, {failed} failed", checks.len()).ok();
    Ok(Outcome { csv: write_csv(&header, &rows), summary: s, exit_code: if failed == 0 { EXIT_OK } else { EXIT_TARGET } })
}

pub fn cmd_oracle_compare(cfg: &RunConfig) -> CliResult<Outcome> {
    let problem = cfg.problem()?;
    if problem.dim() != 1 {
        return Err(ConfigError::Invalid { key: "problem.n".into(), msg: "oracle comparison is one-dimensional".into() }.into());
    }
    let (ts, pts) = (cfg.times()?, cfg.points()?);
    let target = cfg.tolerance("oracle.target", 5e-2)?;
    let norm = match cfg.get("oracle.norm").unwrap_or("sup") {
        "sup" => Norm::Sup,
        "l2" => Norm::L2,
        other => return Err(ConfigError::Invalid { key: "oracle.norm".into(), msg: format!("unknown norm `{other}` (sup, l2)") }.into()),
    };
    let (dt, dx) = (cfg.f64_or("oracle.dt", 1e-3)?, cfg.f64_or("oracle.dx", 0.01)?);
    let (lo, hi) = span(&pts);
    let cauchy: SolutionField = CauchySolver::new(problem.clone(), lo, hi, cauchy_config(cfg)?)?.solve(&ts, &pts, false)?;
    let fd = fd_solve_1d(&problem, &FDGrid::around(&problem, lo, hi, dt, dx)?)?;
    let d = compare(&cauchy, &fd.field, norm)?;

    let header: Vec<String> = ["t", "x", "cauchy", "fd", "difference"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, t) in cauchy.times.iter().enumerate() {
        for (k, p) in cauchy.points.iter().enumerate() {
            let u = cauchy.value(i, k);
            let v = interpolate(&fd.field, *t, p[0]).unwrap_or(f64::NAN);
            rows.push(vec![num(*t), num(p[0]), num(u), num(v), num(u - v)]);
        }
    }
    let ok = d.relative() <= target;
    let mut s = String::new();
    for w in &fd.warnings {
        writeln!(s, "warning: {w}").ok();
    }
    writeln!(s, "oracle-compare: norm={norm:?} absolute={:.3e} reference={:.3e} relative={:.3e} target={target:.1e} points={} {}", d.absolute, d.reference, d.relative(), d.points, pass(ok)).ok();
    Ok(Outcome { csv: write_csv(&header, &rows), summary: s, exit_code: if ok { EXIT_OK } else { EXIT_TARGET } })
}
