//! Fixed-size symmetric matrices (n ≤ 3) and a tridiagonal solver.

use crate::error::{Error, Result};

/// Symmetric `n × n` matrix, `n ∈ {1, 2, 3}`, stored in a 3×3 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub n: usize,
    pub m: [[f64; 3]; 3],
}

/// Condition-number guard for inversion.
pub const MAX_CONDITION: f64 = 1e12;

impl SymMat {
    pub fn identity(n: usize) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate().take(n) {
            row[i] = 1.0;
        }
        Self { n, m }
    }

    pub fn scalar(n: usize, s: f64) -> Self {
        let mut a = Self::identity(n);
        for i in 0..n {
            a.m[i][i] = s;
        }
        a
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut a = Self::identity(d.len());
        for (i, &v) in d.iter().enumerate() {
            a.m[i][i] = v;
        }
        a
    }

    /// From row-major entries; the matrix must be symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if !(1..=3).contains(&n) || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!("need a square matrix of size 1..=3, got {n} rows")));
        }
        let mut m = [[0.0; 3]; 3];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = rows[i][j];
            }
        }
        for i in 0..n {
            for j in 0..i {
                if (m[i][j] - m[j][i]).abs() > 1e-14 * (m[i][j].abs() + m[j][i].abs()).max(1.0) {
                    return Err(Error::InvalidParameter("coefficient matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { n, m })
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        match self.n {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.m[i][j] * self.m[i][j];
            }
        }
        s.sqrt()
    }

    /// Closed-form inverse with a Frobenius condition-number guard.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularMatrix(format!("determinant {d}")));
        }
        let m = &self.m;
        let mut r = [[0.0; 3]; 3];
        match self.n {
            1 => r[0][0] = 1.0 / m[0][0],
            2 => {
                r[0][0] = m[1][1] / d;
                r[1][1] = m[0][0] / d;
                r[0][1] = -m[0][1] / d;
                r[1][0] = -m[1][0] / d;
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
                        let (c, e) = ((i + 1) % 3, (i + 2) % 3);
                        r[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
                    }
                }
            }
        }
        let inv = Self { n: self.n, m: r };
        let cond = self.frobenius() * inv.frobenius();
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularMatrix(format!("condition number {cond:.3e} exceeds {MAX_CONDITION:e}")));
        }
        Ok(inv)
    }

    pub fn mul_vec(&self, y: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|j| self.m[i][j] * y[j]).sum();
        }
        out
    }

    /// `yᵀ M y`.
    pub fn quad_form(&self, y: &[f64]) -> f64 {
        let my = self.mul_vec(y);
        (0..self.n).map(|i| my[i] * y[i]).sum()
    }

    /// Lower Cholesky factor `L` with `M = L Lᵀ`.
    pub fn cholesky(&self) -> Result<[[f64; 3]; 3]> {
        let mut l = [[0.0; 3]; 3];
        for i in 0..self.n {
            for j in 0..=i {
                let mut s = self.m[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::SingularMatrix(format!("matrix not positive definite: {:?}", self.m)));
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Ok(l)
    }

    /// Whether `M − δ₀ I` is positive semidefinite (Cholesky with a small slack).
    pub fn is_elliptic(&self, delta0: f64) -> bool {
        let n = self.n;
        let mut l = [[0.0; 3]; 3];
        let scale = self.frobenius().max(1.0);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.m[i][j] - if i == j { delta0 } else { 0.0 };
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s < -1e-13 * scale {
                        return false;
                    }
                    l[i][i] = s.max(0.0).sqrt();
                } else if l[j][j] > 0.0 {
                    l[i][j] = s / l[j][j];
                } else if s.abs() > 1e-13 * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Solve a tridiagonal system (Thomas algorithm). `lower[0]` and
/// `upper[n−1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(Error::LinearSolveFailure("zero pivot in row 0".into()));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return Err(Error::LinearSolveFailure(format!("zero pivot in row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
