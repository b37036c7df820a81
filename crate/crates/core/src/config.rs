//! Flat `key = value` run configuration with `[section]` headers and `#`
//! comments. Keys before the first header belong to `[problem]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::cauchy::CauchyProblem;
use crate::const_kernels::KernelKind;
use crate::levi::EllipticOperator;
use crate::linalg::SymMat;

const KNOWN: &[(&str, &[&str])] = &[
    ("problem", &["alpha", "n", "T", "coefficients", "coefficient_file", "c0", "u0", "u1", "f"]),
    ("grid", &["t", "x", "t_min", "t_max", "t_count", "x_min", "x_max", "x_count"]),
    ("kernel", &["kind"]),
    ("solve", &["residual_target", "probes", "trace", "h", "n_time", "dy", "initial_times"]),
    ("oracle", &["dt", "dx", "target", "norm"]),
    ("verify", &["suites", "tol"]),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

type CResult<T> = std::result::Result<T, ConfigError>;

/// Parsed configuration; keys are stored as `section.key`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    base: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let mut values = BTreeMap::new();
        let mut section = "problem".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("unterminated section header `{line}`") })?;
                let name = name.trim();
                if !KNOWN.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::Syntax { line: i + 1, msg: format!("unknown section `{name}`") });
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, msg: format!("expected `key = value`, got `{line}`") })?;
            let k = k.trim();
            let full = format!("{section}.{k}");
            let allowed = KNOWN.iter().find(|(s, _)| *s == section).map_or(false, |(_, keys)| keys.contains(&k));
            if !allowed {
                return Err(ConfigError::UnknownKey(full));
            }
            values.insert(full, v.trim().to_string());
        }
        let cfg = Self { values, base: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Self::invalid(key, format!("`{v}` is not a number"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Self::invalid(key, format!("`{v}` is not a non-negative integer"))),
        }
    }

    pub fn list(&self, key: &str) -> CResult<Option<Vec<f64>>> {
        let Some(v) = self.get(key) else { return Ok(None) };
        v.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Self::invalid(key, format!("`{}` is not a number", s.trim()))))
            .collect::<CResult<Vec<_>>>()
            .map(Some)
    }

    pub fn words(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    pub fn alpha(&self) -> CResult<f64> {
        let a = self.f64_or("problem.alpha", 1.5)?;
        if !(a > 1.0 && a < 2.0) {
            return Err(Self::invalid("problem.alpha", format!("{a} not in (1, 2)")));
        }
        Ok(a)
    }

    pub fn dim(&self) -> CResult<usize> {
        let n = self.usize_or("problem.n", 1)?;
        if !(1..=3).contains(&n) {
            return Err(Self::invalid("problem.n", format!("{n} not in {{1, 2, 3}}")));
        }
        Ok(n)
    }

    pub fn horizon(&self) -> CResult<f64> {
        let t = self.f64_or("problem.T", 1.0)?;
        if !(t > 0.0) {
            return Err(Self::invalid("problem.T", "must be positive"));
        }
        Ok(t)
    }

    fn positive(&self, key: &str, default: f64) -> CResult<f64> {
        let v = self.f64_or(key, default)?;
        if !(v > 0.0) {
            return Err(Self::invalid(key, "must be positive"));
        }
        Ok(v)
    }

    pub fn tolerance(&self, key: &str, default: f64) -> CResult<f64> {
        self.positive(key, default)
    }

    fn validate(&self) -> CResult<()> {
        self.alpha()?;
        self.dim()?;
        self.horizon()?;
        for key in ["solve.residual_target", "oracle.target", "verify.tol", "oracle.dt", "oracle.dx", "solve.h", "solve.dy"] {
            self.positive(key, 1.0)?;
        }
        self.kernel_kinds()?;
        self.times()?;
        self.points()?;
        Ok(())
    }

    pub fn kernel_kinds(&self) -> CResult<Vec<KernelKind>> {
        match self.get("kernel.kind") {
            None | Some("all") => Ok(KernelKind::ALL.to_vec()),
            Some(_) => self
                .words("kernel.kind")
                .unwrap_or_default()
                .iter()
                .map(|w| KernelKind::parse(w).ok_or_else(|| Self::invalid("kernel.kind", format!("unknown kernel `{w}`"))))
                .collect(),
        }
    }

    fn axis(&self, name: &str, default: &[f64]) -> CResult<Vec<f64>> {
        if let Some(v) = self.list(&format!("grid.{name}"))? {
            return Ok(v);
        }
        let (lo_k, hi_k, n_k) = (format!("grid.{name}_min"), format!("grid.{name}_max"), format!("grid.{name}_count"));
        match (self.get(&lo_k), self.get(&hi_k)) {
            (None, None) => Ok(default.to_vec()),
            (Some(_), Some(_)) => {
                let (lo, hi) = (self.f64_or(&lo_k, 0.0)?, self.f64_or(&hi_k, 0.0)?);
                let n = self.usize_or(&n_k, 11)?;
                if n < 1 || hi < lo {
                    return Err(Self::invalid(&n_k, format!("empty range [{lo}, {hi}] with {n} points")));
                }
                if n == 1 {
                    return Ok(vec![lo]);
                }
                Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
            }
            (None, Some(_)) => Err(ConfigError::Missing(lo_k)),
            (Some(_), None) => Err(ConfigError::Missing(hi_k)),
        }
    }

    pub fn times(&self) -> CResult<Vec<f64>> {
        let t_end = self.horizon()?;
        let ts = self.axis("t", &[t_end])?;
        if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && **t <= t_end)) {
            return Err(Self::invalid("grid.t", format!("time {t} outside (0, T]")));
        }
        Ok(ts)
    }

    /// Spatial points along the first axis.
    pub fn points(&self) -> CResult<Vec<Vec<f64>>> {
        let n = self.dim()?;
        Ok(self
            .axis("x", &[0.0])?
            .into_iter()
            .map(|x| {
                let mut p = vec![0.0; n];
                p[0] = x;
                p
            })
            .collect())
    }

    pub fn operator(&self) -> CResult<EllipticOperator> {
        let n = self.dim()?;
        let key = "problem.coefficients";
        let op = match self.get(key).unwrap_or("identity") {
            "identity" => Ok(EllipticOperator::laplacian(n)),
            "anisotropic" => EllipticOperator::constant(anisotropic(n), 0.3),
            "sine" => EllipticOperator::new(n, 0.8, 1.0, 0.2, move |x| SymMat::scalar(n, 1.0 + 0.2 * x[0].sin())),
            "table" => {
                if n != 1 {
                    return Err(Self::invalid(key, "tabulated coefficients are one-dimensional"));
                }
                let file = self.get("problem.coefficient_file").ok_or_else(|| ConfigError::Missing("problem.coefficient_file".into()))?;
                let path = self.base.as_ref().map_or_else(|| PathBuf::from(file), |b| b.join(file));
                let table = CoefficientTable::load(&path)?;
                let (lo, slope) = (table.min(), table.max_slope());
                let t = Arc::new(table);
                EllipticOperator::new(1, 0.5 * lo, 1.0, slope, move |x| SymMat::scalar(1, t.eval(x[0])))
            }
            other => return Err(Self::invalid(key, format!("unknown family `{other}` (identity, anisotropic, sine, table)"))),
        }
        .map_err(|e| Self::invalid(key, e.to_string()))?;
        let c0 = self.f64_or("problem.c0", 0.0)?;
        Ok(if c0 != 0.0 { op.with_c(move |_| c0) } else { op })
    }

    pub fn problem(&self) -> CResult<CauchyProblem> {
        let mut p = CauchyProblem::new(self.operator()?, self.alpha()?, self.horizon()?).map_err(|e| Self::invalid("problem.alpha", e.to_string()))?;
        for (key, slot) in [("problem.u0", 0), ("problem.u1", 1)] {
            let Some(name) = self.get(key) else { continue };
            let g = initial_family(name).ok_or_else(|| Self::invalid(key, format!("unknown data `{name}` (zero, one, gaussian, sine, cosine, bump)")))?;
            p = if slot == 0 { p.with_u0(g) } else { p.with_u1(g) };
        }
        if let Some(name) = self.get("problem.f") {
            p = match name {
                "zero" => p,
                "one" => p.with_f(|_, _| 1.0),
                "gaussian" => p.with_f(|_, x| (-x.iter().map(|v| v * v).sum::<f64>()).exp()),
                other => return Err(Self::invalid("problem.f", format!("unknown forcing `{other}` (zero, one, gaussian)"))),
            };
        }
        Ok(p)
    }
}

/// A fixed positive definite matrix, truncated to `n × n`.
pub fn anisotropic(n: usize) -> SymMat {
    let full = [[2.0, 0.5, 0.1], [0.5, 1.5, 0.2], [0.1, 0.2, 1.0]];
    SymMat::from_rows(&full[..n].iter().map(|r| r[..n].to_vec()).collect::<Vec<_>>()).expect("fixed matrix is symmetric")
}

/// `C^∞` bump supported in `|x| ≤ 0.1` with maximum 1.
pub fn bump(x: &[f64]) -> f64 {
    let r2 = x.iter().map(|v| v * v).sum::<f64>() / 0.01;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

fn initial_family(name: &str) -> Option<fn(&[f64]) -> f64> {
    Some(match name {
        "zero" => |_| 0.0,
        "one" => |_| 1.0,
        "gaussian" => |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp(),
        "sine" => |x| x[0].sin(),
        "cosine" => |x| x[0].cos(),
        "bump" => bump,
        _ => return None,
    })
}

/// Piecewise-linear `a(x)` read from `x,a` rows, constant beyond the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl CoefficientTable {
    pub fn load(path: &Path) -> CResult<Self> {
        let key = "problem.coefficient_file";
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let (mut xs, mut values) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Self::bad(key, e.to_string()))?;
            if rec.len() != 2 {
                return Err(Self::bad(key, format!("expected two columns, got {}", rec.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Self::bad(key, format!("`{s}` is not a number")));
            xs.push(num(&rec[0])?);
            values.push(num(&rec[1])?);
        }
        Self::new(xs, values).map_err(|m| Self::bad(key, m))
    }

    fn bad(key: &str, msg: String) -> ConfigError {
        ConfigError::Invalid { key: key.into(), msg }
    }

    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> std::result::Result<Self, String> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err("need at least two rows".into());
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("abscissae must increase".into());
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err("coefficient values must be positive".into());
        }
        Ok(Self { xs, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let th = (x - self.xs[k - 1]) / (self.xs[k] - self.xs[k - 1]);
        (1.0 - th) * self.values[k - 1] + th * self.values[k]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_slope(&self) -> f64 {
        self.xs.windows(2).zip(self.values.windows(2)).map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs()).fold(0.0, f64::max)
    }
}
