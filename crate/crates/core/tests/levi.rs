use fracwave::const_kernels::{const_kernel, Deriv, KernelKind};
use fracwave::levi::{k_kernel, m_kernel, solve_volterra, EllipticOperator, LeviConfig};
use fracwave::linalg::SymMat;
use fracwave::quad::integrate_adaptive;
use fracwave::Error;

fn tiny() -> LeviConfig {
    LeviConfig { t_end: 0.25, n_time: 5, n_space: 9, ..LeviConfig::default() }
}

#[test]
fn constant_coefficients_give_frozen_kernels() {
    let op = EllipticOperator::constant(SymMat::scalar(1, 1.7), 1.0).unwrap();
    let cfg = tiny();
    for kind in KernelKind::ALL {
        let (levi, ck) = solve_volterra(&op, kind, 1.5, &[0.1], &cfg).unwrap();
        assert!(ck.scaled.iter().all(|&v| v == 0.0));
        for &(t, x) in &[(0.05, 0.3), (0.2, -0.4), (0.25, 0.1)] {
            let z = levi.assemble(&ck, t, x, &cfg).unwrap();
            let f = levi.frozen(kind, Deriv::Value, t, x - 0.1, 0.1);
            assert!((z - f).abs() <= 1e-14 * f.abs(), "{kind:?}: {z} vs {f}");
        }
    }
}

#[test]
fn zero_order_term_only() {
    let c0 = 0.7;
    let op = EllipticOperator::laplacian(1).with_c(move |_| c0);
    for &(t, x) in &[(0.3f64, 0.2f64), (1.0, -0.5)] {
        let z = const_kernel(KernelKind::Z1, 1.5, 1, t, x.abs()).unwrap();
        assert!((m_kernel(&op, 1, 1.5, t, &[x], &[0.0]).unwrap() - c0 * z).abs() < 1e-14);
        let y = const_kernel(KernelKind::Y, 1.5, 1, t, x.abs()).unwrap();
        assert!((k_kernel(&op, 1.5, t, &[x], &[0.0]).unwrap() - c0 * y).abs() < 1e-14);
    }
    let op = EllipticOperator::constant(SymMat::scalar(1, 2.0), 1.0).unwrap();
    assert_eq!(m_kernel(&op, 2, 1.5, 0.4, &[0.3], &[0.0]).unwrap(), 0.0);
}

/// `∫₀^t ∫ Y⁽⁰⁾(t−λ, x−y) Z⁽⁰⁾(λ, y) dy dλ` by nested adaptive quadrature.
fn nested_convolution(alpha: f64, kind: KernelKind, t: f64, x: f64) -> f64 {
    let inner = |lam: f64| {
        let s = t - lam;
        if !(s > 0.0 && lam > 0.0) {
            return 0.0;
        }
        let g = |y: f64| const_kernel(KernelKind::Y, alpha, 1, s, (x - y).abs()).unwrap() * const_kernel(kind, alpha, 1, lam, y.abs()).unwrap();
        // breakpoints on the length scales of both factors
        let (wl, ws) = (lam.powf(alpha / 2.0), s.powf(alpha / 2.0));
        let reach = 30.0 * wl.max(ws);
        let mut pts = vec![x - reach, x + reach, 0.0, x];
        for j in -4..6 {
            let h = 2f64.powi(j);
            pts.extend([-h * wl, h * wl, x - h * ws, x + h * ws]);
        }
        pts.retain(|&p| (p - x).abs() <= reach);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.windows(2).map(|w| integrate_adaptive(g, w[0], w[1], 1e-16, 1e-11, 4000).unwrap().value).sum::<f64>()
    };
    integrate_adaptive(inner, 0.0, t, 1e-15, 1e-9, 400).unwrap().value
}

#[test]
fn first_neumann_terms_match_nested_quadrature() {
    let (alpha, c0) = (1.5, 0.8);
    let op = EllipticOperator::laplacian(1).with_c(move |_| c0);
    let cfg = tiny();
    let (levi, ck) = solve_volterra(&op, KernelKind::Z1, alpha, &[0.0], &cfg).unwrap();
    let nz = ck.z.len();
    let mut worst: f64 = 0.0;
    for i in [1, 4] {
        let mut pairs = Vec::new();
        for k in [0, 2, 4, 5, 7] {
            let (t, x) = ck.node(i, k);
            let m = c0 * const_kernel(KernelKind::Z1, alpha, 1, t, x.abs()).unwrap();
            assert!((levi.source(KernelKind::Z1, t, x, 0.0) - m).abs() < 1e-9 * m.abs().max(1e-6));
            pairs.push((ck.first_term[i * nz + k], c0 * c0 * nested_convolution(alpha, KernelKind::Z1, t, x)));
        }
        // deviation relative to the largest value on the time level
        let scale = pairs.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
        worst = pairs.iter().fold(worst, |w, (got, want)| w.max((got - want).abs() / scale));
    }
    assert!(worst < 1e-4, "worst relative deviation {worst:e}");
}

#[test]
fn neumann_increments_decay() {
    let op = EllipticOperator::new(1, 0.8, 1.0, 0.2, |x| SymMat::scalar(1, 1.0 + 0.2 * x[0].sin())).unwrap();
    let cfg = LeviConfig { n_time: 8, n_space: 17, ..LeviConfig::default() };
    let (_, ck) = solve_volterra(&op, KernelKind::Y, 1.5, &[0.0], &cfg).unwrap();
    assert!(ck.residual_norm <= cfg.tol);
    assert!(ck.increment_ratios.last().unwrap() < &1.0);
}

#[test]
fn corrected_z1_integrates_to_one() {
    let op = EllipticOperator::new(1, 0.8, 1.0, 0.2, |x| SymMat::scalar(1, 1.0 + 0.2 * x[0].sin())).unwrap();
    let cfg = LeviConfig { n_time: 8, n_space: 17, ..LeviConfig::default() };
    let (t, x) = (0.25, 0.3);
    // ∫ Z₁(t, x; ξ) dξ over the poles ξ on a uniform grid
    let h = 0.06;
    let mut total = 0.0;
    for m in -22..=22 {
        let xi = x + h * m as f64;
        let (levi, ck) = solve_volterra(&op, KernelKind::Z1, 1.5, &[xi], &cfg).unwrap();
        total += h * levi.assemble(&ck, t, x, &cfg).unwrap();
    }
    assert!((total - 1.0).abs() < 1e-2, "{total}");
}

#[test]
fn higher_dimensions_unsupported() {
    let op = EllipticOperator::laplacian(2);
    assert!(matches!(solve_volterra(&op, KernelKind::Z1, 1.5, &[0.0, 0.0], &tiny()), Err(Error::Unsupported(_))));
}

#[test]
fn coverage_error_beyond_horizon() {
    let op = EllipticOperator::new(1, 0.8, 1.0, 0.2, |x| SymMat::scalar(1, 1.0 + 0.2 * x[0].sin())).unwrap();
    let cfg = tiny();
    let (levi, ck) = solve_volterra(&op, KernelKind::Z1, 1.5, &[0.0], &cfg).unwrap();
    assert!(matches!(levi.assemble(&ck, 0.3, 0.1, &cfg), Err(Error::Coverage(_))));
}
