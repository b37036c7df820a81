use fracwave::cauchy::{potential_w, solve_cauchy, CauchyConfig, CauchyProblem, CauchySolver};
use fracwave::const_kernels::Deriv;
use fracwave::levi::EllipticOperator;
use fracwave::linalg::SymMat;
use fracwave::special_fn::rgamma;
use fracwave::Error;

fn variable() -> EllipticOperator {
    EllipticOperator::new(1, 0.8, 1.0, 0.2, |x| SymMat::scalar(1, 1.0 + 0.2 * x[0].sin())).unwrap()
}

/// `E_α(z) = Σ z^k / Γ(αk + 1)`.
fn mittag_leffler(alpha: f64, z: f64) -> f64 {
    (0..200).map(|k| z.powi(k) * rgamma(alpha * k as f64 + 1.0)).take_while(|v| v.is_finite()).sum()
}

#[test]
fn constant_data_is_preserved() {
    let p = CauchyProblem::new(variable(), 1.5, 0.25).unwrap().with_u0(|_| 1.0);
    let pts: Vec<Vec<f64>> = [-0.5, 0.0, 0.4].iter().map(|&x| vec![x]).collect();
    let s = solve_cauchy(&p, &[0.1, 0.25], &pts, &CauchyConfig::default()).unwrap();
    assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-4), "{:?}", s.values);
}

#[test]
fn linear_in_time() {
    let op = EllipticOperator::constant(SymMat::scalar(1, 1.3), 1.0).unwrap();
    let p = CauchyProblem::new(op, 1.5, 1.0).unwrap().with_u1(|_| 1.0);
    let s = solve_cauchy(&p, &[0.25, 1.0], &[vec![0.2]], &CauchyConfig::default()).unwrap();
    assert!((s.value(0, 0) - 0.25).abs() < 1e-8);
    assert!((s.value(1, 0) - 1.0).abs() < 1e-8);
}

#[test]
fn unit_forcing_in_every_dimension() {
    let alpha = 1.5;
    let cfg = CauchyConfig::default();
    for n in 1..=3 {
        let x = vec![0.1; n];
        let t = 0.5;
        let w = potential_w(&EllipticOperator::laplacian(n), alpha, |_, _| 1.0, Deriv::Value, t, &x, &cfg).unwrap();
        let want = t.powf(alpha) * rgamma(alpha + 1.0);
        assert!((w - want).abs() < 1e-6, "n={n}: {w} vs {want}");
    }
}

#[test]
fn potential_vanishes_at_start() {
    let cfg = CauchyConfig::default();
    let op = variable();
    let f = |_: f64, x: &[f64]| (-x[0] * x[0]).exp();
    let (t, alpha) = (1e-3f64, 1.5);
    let w = potential_w(&op, alpha, f, Deriv::Value, t, &[0.1], &cfg).unwrap();
    let wt = potential_w(&op, alpha, f, Deriv::Dt, t, &[0.1], &cfg).unwrap();
    assert!(w.abs() < 1e-3 && wt.abs() < 0.05, "{w} {wt}");
    // leading behaviour f(x) t^α/Γ(α+1) and f(x) t^{α−1}/Γ(α)
    let fx = (-0.01f64).exp();
    assert!((w / (fx * t.powf(alpha) * rgamma(alpha + 1.0)) - 1.0).abs() < 1e-2, "{w}");
    assert!((wt / (fx * t.powf(alpha - 1.0) * rgamma(alpha)) - 1.0).abs() < 1e-2, "{wt}");
}

#[test]
fn superposition() {
    let op = variable();
    let cfg = CauchyConfig { n_time: 10, ..CauchyConfig::default() };
    let base = || CauchyProblem::new(op.clone(), 1.5, 0.2).unwrap();
    let u0 = |x: &[f64]| (-x[0] * x[0]).exp();
    let u1 = |x: &[f64]| x[0].cos() * (-x[0] * x[0]).exp();
    let pts = vec![vec![0.0], vec![0.5]];
    let a = solve_cauchy(&base().with_u0(u0), &[0.2], &pts, &cfg).unwrap();
    let b = solve_cauchy(&base().with_u1(u1), &[0.2], &pts, &cfg).unwrap();
    let ab = solve_cauchy(&base().with_u0(u0).with_u1(u1), &[0.2], &pts, &cfg).unwrap();
    for k in 0..2 {
        let sum = a.value(0, k) + b.value(0, k);
        assert!((ab.value(0, k) - sum).abs() < 1e-10 * sum.abs().max(1.0));
    }
}

#[test]
fn zero_data_gives_zero() {
    let p = CauchyProblem::new(variable(), 1.5, 0.2).unwrap();
    let s = solve_cauchy(&p, &[0.1, 0.2], &[vec![0.0]], &CauchyConfig::default()).unwrap();
    assert_eq!(s.max_abs(), 0.0);
}

#[test]
fn sine_mode_matches_mittag_leffler() {
    let alpha = 1.5;
    let (t, x1): (f64, f64) = (0.5, 0.3);
    let want = mittag_leffler(alpha, -t.powf(alpha)) * x1.sin();
    for n in 1..=3 {
        let p = CauchyProblem::new(EllipticOperator::laplacian(n), alpha, t).unwrap().with_u0(|x| x[0].sin());
        let mut x = vec![0.0; n];
        x[0] = x1;
        let s = solve_cauchy(&p, &[t], &[x], &CauchyConfig::default()).unwrap();
        assert!((s.value(0, 0) - want).abs() < 1e-4, "n={n}: {} vs {want}", s.value(0, 0));
    }
}

#[test]
fn initial_gaps_shrink() {
    let p = CauchyProblem::new(EllipticOperator::laplacian(1), 1.5, 0.1).unwrap().with_u0(|x| x[0].sin());
    let s = CauchySolver::new(p, 0.0, 1.0, CauchyConfig::default()).unwrap();
    let r = s.initial_condition_report(&[0.1, 0.05, 0.025], &[vec![0.3], vec![0.8]]).unwrap();
    assert!(r.monotone(), "{r:?}");
    assert!(r.u_gap[2] < 5e-3);
}

#[test]
fn variable_coefficients_need_one_dimension() {
    let op = EllipticOperator::new(2, 0.5, 1.0, 0.1, |x| SymMat::scalar(2, 1.0 + 0.1 * x[0].sin())).unwrap();
    let p = CauchyProblem::new(op, 1.5, 0.5).unwrap().with_u0(|_| 1.0);
    assert!(matches!(CauchySolver::new(p, 0.0, 1.0, CauchyConfig::default()), Err(Error::Unsupported(_))));
    let p = CauchyProblem::new(EllipticOperator::laplacian(2).with_c(|_| 1.0), 1.5, 0.5).unwrap();
    assert!(matches!(CauchySolver::new(p, 0.0, 1.0, CauchyConfig::default()), Err(Error::Unsupported(_))));
}

#[test]
fn alpha_outside_range_rejected() {
    assert!(CauchyProblem::new(EllipticOperator::laplacian(1), 2.0, 1.0).is_err());
    assert!(CauchyProblem::new(EllipticOperator::laplacian(1), 1.0, 1.0).is_err());
}
