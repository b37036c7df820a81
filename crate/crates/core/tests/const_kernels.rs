use fracwave::const_kernels::{
    const_kernel, const_triple, frozen_kernel, gamma_kernel, identity_check, rho, Deriv, EllipticParamField, Frozen, KernelId,
    KernelKind,
};
use fracwave::frac_calc::{rl_derivative, rl_integral, TimeSamples};
use fracwave::linalg::SymMat;
use fracwave::quad::{integrate_adaptive, uniform_mesh};
use fracwave::special_fn::{wright_phi, WrightParams};
use fracwave::Error;

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

#[test]
fn gamma_kernel_examples() {
    let v = gamma_kernel(1.5, 1, 1.0, 0.0).unwrap();
    assert!((v - 0.5 / gamma(0.75)).abs() < 1e-15);

    // n = 3: f(z; 2, δ) = 2 ∫_1^∞ Φ(−β, δ, −z s) ds
    let (alpha, beta) = (1.5, 0.75);
    let delta = alpha - 1.5 * alpha;
    let p = WrightParams::new(beta, delta).unwrap();
    let integral = integrate_adaptive(|s| wright_phi(p, -s).unwrap().value, 1.0, 60.0, 0.0, 1e-12, 2000).unwrap();
    let oracle = (1.0 / (8.0 * std::f64::consts::PI)) * 2.0 * integral.value;
    let v = gamma_kernel(alpha, 3, 1.0, 1.0).unwrap();
    assert!((v - oracle).abs() < 1e-9 * oracle.abs(), "{v} vs {oracle}");

    let lhs = gamma_kernel(1.5, 1, 4.0, 2.0).unwrap();
    let rhs = 4f64.powf(-0.25) * gamma_kernel(1.5, 1, 1.0, 2.0 * 4f64.powf(-0.75)).unwrap();
    assert!((lhs - rhs).abs() < 1e-14 * rhs.abs());

    assert!(matches!(gamma_kernel(1.5, 2, 1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn triple_examples() {
    let tr = const_triple(1.5, 1, 1.0, 0.0).unwrap();
    assert!((tr.z1 - 0.5 / gamma(0.25)).abs() < 1e-15);
    assert_eq!(tr.y, gamma_kernel(1.5, 1, 1.0, 0.0).unwrap());

    // M-Wright form of Z1 in one dimension
    let (alpha, t, x): (f64, f64, f64) = (1.3, 0.7, 0.45);
    let b = alpha / 2.0;
    let mw = 0.5 * t.powf(-b) * wright_phi(WrightParams::new(b, 1.0 - b).unwrap(), -t.powf(-b) * x).unwrap().value;
    assert!((const_kernel(KernelKind::Z1, alpha, 1, t, x).unwrap() - mw).abs() < 1e-13);

    let rep = identity_check(&EllipticParamField::identity(1), KernelKind::Z1, 1.25, 0.5, &[0.0], 1e-8).unwrap();
    assert!(rep.relative() < 1e-6, "{rep:?}");
}

fn y_samples(alpha: f64, r: f64, n_nodes: usize) -> TimeSamples {
    TimeSamples::from_fn(uniform_mesh(0.0, 1.0, n_nodes), |s| {
        if s == 0.0 {
            0.0
        } else {
            const_kernel(KernelKind::Y, alpha, 1, s, r).unwrap()
        }
    })
    .unwrap()
}

#[test]
fn fractional_derivatives_of_y() {
    let (alpha, t, r): (f64, f64, f64) = (1.75, 0.4, 0.3);
    let g = y_samples(alpha, r, 800);
    let z1 = const_kernel(KernelKind::Z1, alpha, 1, t, r).unwrap();
    let v = rl_derivative(&g, alpha - 1.0, t).unwrap();
    assert!((v - z1).abs() < 1e-3 * z1.abs(), "{v} vs {z1}");

    let z2 = const_kernel(KernelKind::Z2, alpha, 1, t, r).unwrap();
    let v = rl_integral(&g, alpha - 2.0, t).unwrap();
    assert!((v - z2).abs() < 1e-3 * z2.abs(), "{v} vs {z2}");
}

#[test]
fn frozen_identity_reduces_to_triple() {
    let field = EllipticParamField::identity(2);
    let y = [0.3, -0.4];
    for kind in KernelKind::ALL {
        let a = frozen_kernel(&field, KernelId::value(kind), 1.5, 0.8, &y, &[0.0, 0.0]).unwrap();
        let b = const_kernel(kind, 1.5, 2, 0.8, 0.5).unwrap();
        assert!((a - b).abs() < 1e-14 * b.abs());
    }
}

fn aniso2() -> SymMat {
    SymMat::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap()
}

#[test]
fn first_derivatives_match_finite_differences() {
    let fr = Frozen::new(aniso2()).unwrap();
    let (alpha, t, y) = (1.5, 0.5, [0.4, -0.2]);
    for kind in KernelKind::ALL {
        for i in 0..2 {
            let exact = fr.eval(KernelId { which: kind, deriv: Deriv::D1(i) }, alpha, t, &y).unwrap();
            let h = 1e-5;
            let (mut yp, mut ym) = (y, y);
            yp[i] += h;
            ym[i] -= h;
            let id = KernelId::value(kind);
            let fd = (fr.eval(id, alpha, t, &yp).unwrap() - fr.eval(id, alpha, t, &ym).unwrap()) / (2.0 * h);
            assert!((fd - exact).abs() < 1e-6 * exact.abs(), "{kind:?} d{i}: {fd} vs {exact}");
        }
    }
}

#[test]
fn second_and_time_derivatives_match_finite_differences() {
    let (alpha, t) = (1.5, 0.5);
    let cases: [(SymMat, Vec<f64>); 3] = [
        (SymMat::scalar(1, 1.4), vec![0.35]),
        (aniso2(), vec![0.4, -0.2]),
        (SymMat::from_rows(&[vec![1.5, 0.2, 0.0], vec![0.2, 1.0, 0.1], vec![0.0, 0.1, 1.2]]).unwrap(), vec![0.3, -0.2, 0.25]),
    ];
    for (a, y) in cases {
        let fr = Frozen::new(a).unwrap();
        let n = a.n;
        for kind in KernelKind::ALL {
            for i in 0..n {
                for j in 0..n {
                    let exact = fr.eval(KernelId { which: kind, deriv: Deriv::D2(i, j) }, alpha, t, &y).unwrap();
                    let id = KernelId { which: kind, deriv: Deriv::D1(i) };
                    let cd = |h: f64| {
                        let (mut yp, mut ym) = (y.clone(), y.clone());
                        yp[j] += h;
                        ym[j] -= h;
                        (fr.eval(id, alpha, t, &yp).unwrap() - fr.eval(id, alpha, t, &ym).unwrap()) / (2.0 * h)
                    };
                    // Richardson-extrapolated centered difference
                    let fd = (4.0 * cd(5e-4) - cd(1e-3)) / 3.0;
                    assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1e-3), "n={n} {kind:?} d{i}{j}: {fd} vs {exact}");
                }
            }
            let exact = fr.eval(KernelId { which: kind, deriv: Deriv::Dt }, alpha, t, &y).unwrap();
            let h = 1e-5;
            let id = KernelId::value(kind);
            let fd = (fr.eval(id, alpha, t + h, &y).unwrap() - fr.eval(id, alpha, t - h, &y).unwrap()) / (2.0 * h);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1e-3), "n={n} {kind:?} dt: {fd} vs {exact}");
        }
    }
}

#[test]
fn frozen_kernels_are_even() {
    let field = EllipticParamField::constant(aniso2(), 0.5);
    for kind in KernelKind::ALL {
        let id = KernelId::value(kind);
        let a = frozen_kernel(&field, id, 1.5, 0.7, &[0.4, -0.2], &[0.0, 0.0]).unwrap();
        let b = frozen_kernel(&field, id, 1.5, 0.7, &[-0.4, 0.2], &[0.0, 0.0]).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn frozen_rejects_bad_coefficients() {
    let field = EllipticParamField::constant(SymMat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]).unwrap(), 0.0);
    assert!(matches!(
        frozen_kernel(&field, KernelId::value(KernelKind::Z1), 1.5, 1.0, &[0.1, 0.2], &[0.0, 0.0]),
        Err(Error::SingularMatrix(_))
    ));
}

#[test]
fn rho_examples() {
    assert_eq!(rho(1.0, 1.5, 0.3, &[0.2, 0.1], &[0.2, 0.1]), 1.0);
    assert!((rho(1.0, 1.5, 1.0, &[1.0], &[0.0]) - (-1f64).exp()).abs() < 1e-15);
    let mut prev = 1.0;
    for k in 1..50 {
        let v = rho(0.7, 1.5, 0.5, &[0.1 * k as f64], &[0.0]);
        assert!(v < prev || (v == 0.0 && prev == 0.0));
        prev = v;
    }
}

#[test]
fn identity_check_examples() {
    let rep = identity_check(&EllipticParamField::identity(3), KernelKind::Z1, 1.5, 1.0, &[0.0; 3], 1e-8).unwrap();
    assert!(rep.relative() < 1e-6, "{rep:?}");
    let rep = identity_check(&EllipticParamField::identity(2), KernelKind::Y, 1.25, 0.5, &[0.0; 2], 1e-8).unwrap();
    assert!((rep.target - 0.5f64.powf(0.25) / gamma(1.25)).abs() < 1e-15);
    assert!(rep.relative() < 1e-6, "{rep:?}");
    let rep = identity_check(&EllipticParamField::constant(SymMat::diag(&[3.0]), 1.0), KernelKind::Z2, 1.75, 2.0, &[0.0], 1e-8).unwrap();
    assert!(rep.relative() < 1e-6, "{rep:?}");
}
