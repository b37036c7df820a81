//! Python bindings for the `fracwave` crate.
//!
//! Coefficients, initial data and forcings may be given as Python callables.
//! Points are passed as lists of floats; a callable that raises yields NaN.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::fracwave::cauchy::{self, CauchyConfig, CauchyProblem};
use ::fracwave::cli::{self, Command};
use ::fracwave::config::RunConfig;
use ::fracwave::const_kernels::{self, Deriv, EllipticParamField, Frozen, KernelId, KernelKind};
use ::fracwave::estimates;
use ::fracwave::frac_calc::{self, TimeSamples};
use ::fracwave::levi::{self, EllipticOperator, LeviConfig};
use ::fracwave::linalg::SymMat;
use ::fracwave::oracle::{self, FDGrid};
use ::fracwave::special_fn::{self, FFamilyParams, WrightParams};
use ::fracwave::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Grid(_) | Error::SingularMatrix(_) | Error::Coverage(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn kind(name: &str) -> PyResult<KernelKind> {
    KernelKind::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown kernel `{name}` (Z1, Z2, Y)")))
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<SymMat> {
    SymMat::from_rows(rows).map_err(err)
}

fn scalar_fn(cb: Py<PyAny>) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
    move |x| Python::attach(|py| cb.bind(py).call1((x.to_vec(),)).and_then(|v| v.extract::<f64>()).unwrap_or(f64::NAN))
}

fn forcing_fn(cb: Py<PyAny>) -> impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static {
    move |t, x| Python::attach(|py| cb.bind(py).call1((t, x.to_vec())).and_then(|v| v.extract::<f64>()).unwrap_or(f64::NAN))
}

/// Elliptic operator `Σ a_ij ∂_ij + Σ b_j ∂_j + c` in one to three dimensions.
#[pyclass(name = "Operator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: EllipticOperator,
}

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn laplacian(n: usize) -> PyResult<Self> {
        if !(1..=3).contains(&n) {
            return Err(PyValueError::new_err(format!("dimension {n} not in 1..=3")));
        }
        Ok(Self { inner: EllipticOperator::laplacian(n) })
    }

    /// Constant symmetric positive definite coefficient matrix.
    #[staticmethod]
    #[pyo3(signature = (a, delta0=1e-3))]
    fn constant(a: Vec<Vec<f64>>, delta0: f64) -> PyResult<Self> {
        Ok(Self { inner: EllipticOperator::constant(matrix(&a)?, delta0).map_err(err)? })
    }

    /// One-dimensional `a(x) = 1 + amplitude·sin x`.
    #[staticmethod]
    #[pyo3(signature = (amplitude=0.2))]
    fn sine(amplitude: f64) -> PyResult<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(PyValueError::new_err("amplitude must lie in (-1, 1)"));
        }
        let inner = EllipticOperator::new(1, 1.0 - amplitude.abs(), 1.0, amplitude.abs(), move |x| SymMat::scalar(1, 1.0 + amplitude * x[0].sin())).map_err(err)?;
        Ok(Self { inner })
    }

    /// Variable coefficients from a callable returning an `n × n` matrix
    /// (or a float when `n = 1`).
    #[staticmethod]
    #[pyo3(signature = (n, a, delta0, gamma=1.0, holder=1.0))]
    fn from_function(n: usize, a: Py<PyAny>, delta0: f64, gamma: f64, holder: f64) -> PyResult<Self> {
        let f = move |x: &[f64]| {
            Python::attach(|py| {
                let v = a.bind(py).call1((x.to_vec(),))?;
                if let Ok(s) = v.extract::<f64>() {
                    return Ok(SymMat::scalar(n, s));
                }
                let rows: Vec<Vec<f64>> = v.extract()?;
                SymMat::from_rows(&rows).map_err(err)
            })
            .unwrap_or_else(|_: PyErr| SymMat::scalar(n, f64::NAN))
        };
        Ok(Self { inner: EllipticOperator::new(n, delta0, gamma, holder, f).map_err(err)? })
    }

    /// Adds a zero-order term; `c` is a float or a callable of `x`.
    fn with_c(&self, c: Py<PyAny>) -> PyResult<Self> {
        let op = self.inner.clone();
        let constant = Python::attach(|py| c.bind(py).extract::<f64>().ok());
        Ok(Self { inner: match constant { Some(v) => op.with_c(move |_| v), None => op.with_c(scalar_fn(c)) } })
    }

    /// Adds a first-order term from a callable returning a list of length `n`.
    fn with_b(&self, b: Py<PyAny>) -> Self {
        let f = move |x: &[f64]| {
            Python::attach(|py| {
                let v: Vec<f64> = b.bind(py).call1((x.to_vec(),))?.extract()?;
                let mut out = [0.0; 3];
                for (o, w) in out.iter_mut().zip(&v) {
                    *o = *w;
                }
                Ok::<_, PyErr>(out)
            })
            .unwrap_or([f64::NAN; 3])
        };
        Self { inner: self.inner.clone().with_b(f) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn a(&self, x: Vec<f64>) -> Vec<Vec<f64>> {
        let m = self.inner.a(&x);
        (0..m.n).map(|i| m.m[i][..m.n].to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={}, lower_order={})", self.inner.dim, self.inner.has_lower_order())
    }
}

fn problem(op: &PyOperator, alpha: f64, t_end: f64, u0: Option<Py<PyAny>>, u1: Option<Py<PyAny>>, f: Option<Py<PyAny>>) -> PyResult<CauchyProblem> {
    let mut p = CauchyProblem::new(op.inner.clone(), alpha, t_end).map_err(err)?;
    if let Some(g) = u0 {
        p = p.with_u0(scalar_fn(g));
    }
    if let Some(g) = u1 {
        p = p.with_u1(scalar_fn(g));
    }
    if let Some(g) = f {
        p = p.with_f(forcing_fn(g));
    }
    Ok(p)
}

/// Solver for `D^{(α)}u = 𝓑u + f`, `u(0) = u0`, `∂_t u(0) = u1` on `(0, T]`.
#[pyclass(name = "CauchySolver", frozen)]
struct PyCauchySolver {
    inner: cauchy::CauchySolver,
}

#[pymethods]
impl PyCauchySolver {
    #[new]
    #[pyo3(signature = (op, alpha, t_end, x_lo=0.0, x_hi=0.0, u0=None, u1=None, f=None, n_time=16, dy=0.05))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        op: &PyOperator,
        alpha: f64,
        t_end: f64,
        x_lo: f64,
        x_hi: f64,
        u0: Option<Py<PyAny>>,
        u1: Option<Py<PyAny>>,
        f: Option<Py<PyAny>>,
        n_time: usize,
        dy: f64,
    ) -> PyResult<Self> {
        let p = problem(op, alpha, t_end, u0, u1, f)?;
        let cfg = CauchyConfig { n_time, dy, ..CauchyConfig::default() };
        let inner = py.detach(|| cauchy::CauchySolver::new(p, x_lo, x_hi, cfg)).map_err(err)?;
        Ok(Self { inner })
    }

    fn u(&self, py: Python<'_>, t: f64, x: Vec<f64>) -> PyResult<f64> {
        py.detach(|| self.inner.u(t, &x)).map_err(err)
    }

    fn u_t(&self, py: Python<'_>, t: f64, x: Vec<f64>) -> PyResult<f64> {
        py.detach(|| self.inner.u_t(t, &x)).map_err(err)
    }

    /// Values on `times × points`; returns a dict with `values[i][k]`.
    #[pyo3(signature = (times, points, with_dt=false))]
    fn solve<'py>(&self, py: Python<'py>, times: Vec<f64>, points: Vec<Vec<f64>>, with_dt: bool) -> PyResult<Bound<'py, PyDict>> {
        let field = py.detach(|| self.inner.solve(&times, &points, with_dt)).map_err(err)?;
        let np = field.points.len();
        let d = PyDict::new(py);
        d.set_item("times", &field.times)?;
        d.set_item("points", &field.points)?;
        d.set_item("values", field.values.chunks(np.max(1)).map(<[f64]>::to_vec).collect::<Vec<_>>())?;
        if let Some(dt) = &field.dt_values {
            d.set_item("dt_values", dt.chunks(np.max(1)).map(<[f64]>::to_vec).collect::<Vec<_>>())?;
        }
        Ok(d)
    }

    #[pyo3(signature = (t, x, trace_nodes=160, h=0.02))]
    fn residual<'py>(&self, py: Python<'py>, t: f64, x: Vec<f64>, trace_nodes: usize, h: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = py.detach(|| self.inner.residual(t, &x, trace_nodes, h)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("caputo", r.caputo)?;
        d.set_item("operator", r.operator)?;
        d.set_item("forcing", r.forcing)?;
        d.set_item("residual", r.residual)?;
        d.set_item("relative", r.relative)?;
        Ok(d)
    }

    fn initial_condition_report<'py>(&self, py: Python<'py>, ts: Vec<f64>, xs: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
        let r = py.detach(|| self.inner.initial_condition_report(&ts, &xs)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("ts", &r.ts)?;
        d.set_item("u_gap", &r.u_gap)?;
        d.set_item("ut_gap", &r.ut_gap)?;
        d.set_item("u_order", r.u_order)?;
        d.set_item("ut_order", r.ut_order)?;
        d.set_item("monotone", r.monotone())?;
        Ok(d)
    }

    fn provenance<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.provenance();
        let d = PyDict::new(py);
        d.set_item("z1", p.z1)?;
        d.set_item("z2", p.z2)?;
        d.set_item("y", p.y)?;
        d.set_item("levi", p.levi)?;
        Ok(d)
    }
}

/// Levi-corrected fundamental solution with pole `xi` (one dimension).
#[pyclass(name = "FundamentalSolution", frozen)]
struct PyFundamental {
    levi: levi::Levi1d,
    ck: levi::CorrectedKernel,
    cfg: LeviConfig,
}

#[pymethods]
impl PyFundamental {
    #[new]
    #[pyo3(signature = (op, kernel, alpha, xi, t_end=0.25, n_time=24, n_space=49))]
    fn new(py: Python<'_>, op: &PyOperator, kernel: &str, alpha: f64, xi: f64, t_end: f64, n_time: usize, n_space: usize) -> PyResult<Self> {
        let cfg = LeviConfig { t_end, n_time, n_space, ..LeviConfig::default() };
        let k = kind(kernel)?;
        let (levi, ck) = py.detach(|| levi::solve_volterra(&op.inner, k, alpha, &[xi], &cfg)).map_err(err)?;
        Ok(Self { levi, ck, cfg })
    }

    fn __call__(&self, py: Python<'_>, t: f64, x: f64) -> PyResult<f64> {
        py.detach(|| self.levi.assemble(&self.ck, t, x, &self.cfg)).map_err(err)
    }

    fn dt(&self, py: Python<'_>, t: f64, x: f64) -> PyResult<f64> {
        py.detach(|| self.levi.assemble_dt(&self.ck, t, x, &self.cfg)).map_err(err)
    }

    /// Frozen kernel without the correction.
    fn frozen(&self, t: f64, x: f64) -> f64 {
        self.levi.frozen(self.ck.kind, Deriv::Value, t, x - self.ck.xi, self.ck.xi)
    }

    /// Density `Q(λ, y)` of the correction.
    fn density(&self, lam: f64, y: f64) -> f64 {
        self.levi.q_value(&self.ck, lam, y)
    }
}

#[pyfunction]
fn wright_phi(beta: f64, delta: f64, z: f64) -> PyResult<f64> {
    Ok(special_fn::wright_phi(WrightParams::new(beta, delta).map_err(err)?, z).map_err(err)?.value)
}

#[pyfunction]
fn wright_phi_dz(beta: f64, delta: f64, z: f64) -> PyResult<f64> {
    Ok(special_fn::wright_phi_dz(WrightParams::new(beta, delta).map_err(err)?, z).map_err(err)?.value)
}

#[pyfunction]
fn f_family(mu: f64, delta: f64, beta: f64, z: f64) -> PyResult<f64> {
    Ok(special_fn::f_family(FFamilyParams::new(mu, delta, beta).map_err(err)?, z).map_err(err)?.value)
}

#[pyfunction]
fn f_family_dz(mu: f64, delta: f64, beta: f64, z: f64) -> PyResult<f64> {
    Ok(special_fn::f_family_dz(FFamilyParams::new(mu, delta, beta).map_err(err)?, z).map_err(err)?.value)
}

/// Radial constant-coefficient kernel with `a = I`.
#[pyfunction]
fn const_kernel(kernel: &str, alpha: f64, n: usize, t: f64, r: f64) -> PyResult<f64> {
    const_kernels::const_kernel(kind(kernel)?, alpha, n, t, r).map_err(err)
}

/// Kernel with frozen coefficient matrix `a` at displacement `y`.
#[pyfunction]
fn frozen_kernel(a: Vec<Vec<f64>>, kernel: &str, alpha: f64, t: f64, y: Vec<f64>) -> PyResult<f64> {
    let id = KernelId::value(kind(kernel)?);
    Frozen::new(matrix(&a)?).and_then(|f| f.eval(id, alpha, t, &y)).map_err(err)
}

/// `∫ K dy` over `ℝⁿ` against its closed form.
#[pyfunction]
#[pyo3(signature = (kernel, alpha, t, a, tol=1e-6))]
fn identity_check<'py>(py: Python<'py>, kernel: &str, alpha: f64, t: f64, a: Vec<Vec<f64>>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = matrix(&a)?;
    let field = EllipticParamField::constant(m, 1e-12);
    let r = const_kernels::identity_check(&field, kind(kernel)?, alpha, t, &vec![0.0; m.n], tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("computed", r.computed)?;
    d.set_item("target", r.target)?;
    d.set_item("relative", r.relative())?;
    Ok(d)
}

fn samples(nodes: Vec<f64>, values: Vec<f64>, derivatives: Option<Vec<f64>>) -> PyResult<TimeSamples> {
    let s = TimeSamples::new(nodes, values).map_err(err)?;
    match derivatives {
        Some(d) => s.with_derivatives(d).map_err(err),
        None => Ok(s),
    }
}

/// Caputo derivative of order `alpha ∈ (1, 2)` of sampled data at `t`.
#[pyfunction]
#[pyo3(signature = (nodes, values, alpha, t, derivatives=None))]
fn caputo(nodes: Vec<f64>, values: Vec<f64>, alpha: f64, t: f64, derivatives: Option<Vec<f64>>) -> PyResult<f64> {
    frac_calc::caputo_apply(&samples(nodes, values, derivatives)?, alpha, t).map_err(err)
}

/// Riemann–Liouville integral of order `order > 0`.
#[pyfunction]
fn rl_integral(nodes: Vec<f64>, values: Vec<f64>, order: f64, t: f64) -> PyResult<f64> {
    frac_calc::rl_integral(&samples(nodes, values, None)?, -order, t).map_err(err)
}

/// Riemann–Liouville derivative of order `order > 0`.
#[pyfunction]
fn rl_derivative(nodes: Vec<f64>, values: Vec<f64>, order: f64, t: f64) -> PyResult<f64> {
    frac_calc::rl_derivative(&samples(nodes, values, None)?, order, t).map_err(err)
}

/// Parametrix potential `W[f](t, x)`, or its `t`-derivative.
#[pyfunction]
#[pyo3(signature = (op, alpha, f, t, x, dt=false))]
fn potential_w(py: Python<'_>, op: &PyOperator, alpha: f64, f: Py<PyAny>, t: f64, x: Vec<f64>, dt: bool) -> PyResult<f64> {
    let deriv = if dt { Deriv::Dt } else { Deriv::Value };
    let g = forcing_fn(f);
    py.detach(|| cauchy::potential_w(&op.inner, alpha, g, deriv, t, &x, &CauchyConfig::default())).map_err(err)
}

/// Finite-difference reference solution on `[x_lo, x_hi]` (one dimension).
#[pyfunction]
#[pyo3(signature = (op, alpha, t_end, dt, dx, x_lo, x_hi, u0=None, u1=None, f=None))]
#[allow(clippy::too_many_arguments)]
fn fd_solve<'py>(
    py: Python<'py>,
    op: &PyOperator,
    alpha: f64,
    t_end: f64,
    dt: f64,
    dx: f64,
    x_lo: f64,
    x_hi: f64,
    u0: Option<Py<PyAny>>,
    u1: Option<Py<PyAny>>,
    f: Option<Py<PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = problem(op, alpha, t_end, u0, u1, f)?;
    let grid = FDGrid::new(dt, dx, x_lo, x_hi).map_err(err)?;
    let s = py.detach(|| oracle::fd_solve_1d(&p, &grid)).map_err(err)?;
    let nx = s.field.points.len();
    let d = PyDict::new(py);
    d.set_item("times", &s.field.times)?;
    d.set_item("x", s.field.points.iter().map(|p| p[0]).collect::<Vec<_>>())?;
    d.set_item("values", s.field.values.chunks(nx).map(<[f64]>::to_vec).collect::<Vec<_>>())?;
    d.set_item("warnings", &s.warnings)?;
    Ok(d)
}

/// Runs every envelope check; one dict per case.
#[pyfunction]
fn envelope_suite<'py>(py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports = py.detach(estimates::envelope_suite).map_err(err)?;
    reports
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("name", &r.name)?;
            d.set_item("sigma", r.sigma_fit)?;
            d.set_item("growth", r.growth)?;
            d.set_item("passed", r.passed())?;
            Ok(d)
        })
        .collect()
}

/// Runs a batch command on configuration text; returns `(csv, summary, exit_code)`.
#[pyfunction]
#[pyo3(signature = (command, config, tol=None))]
fn run(py: Python<'_>, command: &str, config: &str, tol: Option<f64>) -> PyResult<(String, String, i32)> {
    let cmd = match command {
        "kernel" => Command::Kernel,
        "solve" => Command::Solve,
        "verify" => Command::Verify,
        "oracle-compare" => Command::OracleCompare,
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    };
    let cfg = RunConfig::parse(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    match py.detach(|| cli::run(cmd, &cfg, tol)) {
        Ok(o) => Ok((o.csv, o.summary, o.exit_code)),
        Err(e) => Ok((String::new(), e.to_string(), e.exit_code())),
    }
}

#[pymodule]
fn fracwave_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyCauchySolver>()?;
    m.add_class::<PyFundamental>()?;
    m.add_function(wrap_pyfunction!(wright_phi, m)?)?;
    m.add_function(wrap_pyfunction!(wright_phi_dz, m)?)?;
    m.add_function(wrap_pyfunction!(f_family, m)?)?;
    m.add_function(wrap_pyfunction!(f_family_dz, m)?)?;
    m.add_function(wrap_pyfunction!(const_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(frozen_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(caputo, m)?)?;
    m.add_function(wrap_pyfunction!(rl_integral, m)?)?;
    m.add_function(wrap_pyfunction!(rl_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(potential_w, m)?)?;
    m.add_function(wrap_pyfunction!(fd_solve, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
