//! Small dense linear algebra: vector helpers and a symmetric matrix type.
//!
//! [`SymMat`] keeps only the upper triangle, so `get(i, j) == get(j, i)` holds
//! bit-for-bit no matter which updates were applied. Everything here is sized
//! for the dimensions the estimators work with (a few thousand at most).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular (pivot {pivot} = {value:e})")]
    Singular { pivot: usize, value: f64 },
    #[error("rows do not form a symmetric matrix at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

const MAX_JACOBI_SWEEPS: usize = 10_000;
const EIGEN_TOLERANCE: f64 = 1e-8;

/// Real symmetric `d × d` matrix in packed upper-triangular storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMat {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * i.saturating_sub(1) / 2 + (j - i)
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        m.add_diagonal(value);
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                packed.push(f(i, j));
            }
        }
        Self { dim, packed }
    }

    /// Builds a matrix from dense rows, which must be square and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if rows[i][j] != rows[j][i] {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// `u vᵀ + v uᵀ`.
    pub fn sym_rank2(u: &[f64], v: &[f64]) -> Result<Self, LinalgError> {
        if u.len() != v.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: u.len(),
                found: v.len(),
            });
        }
        Ok(Self::from_fn(u.len(), |i, j| u[i] * v[j] + v[i] * u[j]))
    }

    /// `u uᵀ`.
    pub fn outer(u: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * u[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(self.dim, i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = packed_index(self.dim, i, j);
        self.packed[k] = value;
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.packed)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(self.mul_vec(v))
    }

    /// Matrix-vector product; panics on a dimension mismatch.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "SymMat::mul_vec dimension mismatch");
        let mut out = vec![0.0; self.dim];
        let mut k = 0;
        for i in 0..self.dim {
            let vi = v[i];
            out[i] += self.packed[k] * vi;
            k += 1;
            let mut acc = 0.0;
            for j in (i + 1)..self.dim {
                let a = self.packed[k];
                acc += a * v[j];
                out[j] += a * vi;
                k += 1;
            }
            out[i] += acc;
        }
        out
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.mul_vec(v))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut diag = 0.0;
        let mut off = 0.0;
        let mut k = 0;
        for i in 0..self.dim {
            diag += self.packed[k] * self.packed[k];
            k += 1;
            for _ in (i + 1)..self.dim {
                off += self.packed[k] * self.packed[k];
                k += 1;
            }
        }
        (diag + 2.0 * off).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.packed.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            let k = packed_index(self.dim, i, i);
            self.packed[k] += value;
        }
    }

    /// `self += alpha (u vᵀ + v uᵀ)`.
    pub fn add_sym_rank2(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.dim);
        assert_eq!(v.len(), self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                self.packed[k] += alpha * (u[i] * v[j] + v[i] * u[j]);
                k += 1;
            }
        }
    }

    /// `self += alpha u uᵀ`.
    pub fn add_rank1(&mut self, alpha: f64, u: &[f64]) {
        assert_eq!(u.len(), self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            let s = alpha * u[i];
            for j in i..self.dim {
                self.packed[k] += s * u[j];
                k += 1;
            }
        }
    }

    /// `self += alpha other`.
    pub fn axpy(&mut self, alpha: f64, other: &SymMat) {
        assert_eq!(self.dim, other.dim);
        axpy(alpha, &other.packed, &mut self.packed);
    }

    /// `self = (1 - w) self + w other`.
    pub fn blend(&mut self, w: f64, other: &SymMat) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.packed.iter_mut().zip(&other.packed) {
            *a = (1.0 - w) * *a + w * b;
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn cholesky(&self) -> Result<Cholesky, LinalgError> {
        Cholesky::factor(self)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; the result is
    /// symmetrized from the upper triangle.
    pub fn inverse(&self) -> Result<SymMat, LinalgError> {
        let d = self.dim;
        let mut a = self.to_dense();
        let mut inv: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let scale = self
            .packed
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for col in 0..d {
            let pivot_row = (col..d)
                .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
                .unwrap_or(col);
            let pivot = a[pivot_row][col];
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(LinalgError::Singular { pivot: col, value: pivot });
            }
            a.swap(col, pivot_row);
            inv.swap(col, pivot_row);
            let p = a[col][col];
            for j in 0..d {
                a[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let f = a[r][col];
                if f == 0.0 {
                    continue;
                }
                for j in 0..d {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
        Ok(SymMat::from_fn(d, |i, j| 0.5 * (inv[i][j] + inv[j][i])))
    }

    /// All eigenvalues in ascending order (cyclic Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let mut a = self.to_dense();
        let total = self.frobenius_norm();
        if total == 0.0 {
            return vec![0.0; d];
        }
        for _ in 0..MAX_JACOBI_SWEEPS {
            let off: f64 = (0..d)
                .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum::<f64>()
                .sqrt();
            if off <= EIGEN_TOLERANCE * 1e-6 * total {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p][q];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(m: &SymMat) -> Result<Self, LinalgError> {
        let d = m.dim();
        let mut l = vec![0.0; d * d];
        for j in 0..d {
            let mut diag = m.get(j, j);
            for k in 0..j {
                diag -= l[j * d + k] * l[j * d + k];
            }
            if !(diag > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { pivot: j, value: diag });
            }
            let ljj = diag.sqrt();
            l[j * d + j] = ljj;
            for i in (j + 1)..d {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                l[i * d + j] = s / ljj;
            }
        }
        Ok(Self { dim: d, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// `L z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..=i).map(|k| self.get(i, k) * z[k]).sum())
            .collect()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMat {
        SymMat::from_fn(self.dim, |i, j| {
            (0..=i.min(j)).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }
}
