//! Small dense matrices (n ≤ 3) and a banded Cholesky factorization used as
//! the solver preconditioner.

use crate::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// A square matrix of dimension `dim ≤ 3`, stored in the top-left block of a
/// fixed 3×3 array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat {
    dim: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl SmallMat {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        SmallMat {
            dim,
            a: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i][i] = s;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have length `rows.len()`.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::config(format!("matrix dimension {dim} unsupported")));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::config("matrix rows must be square"));
            }
            m.a[i][..dim].copy_from_slice(row);
        }
        Ok(m)
    }

    /// Counter-clockwise rotation of the plane by `theta`.
    pub fn rotation2(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let mut m = Self::zeros(2);
        m.a[0][0] = c;
        m.a[0][1] = -s;
        m.a[1][0] = s;
        m.a[1][1] = c;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
    }

    /// `out = M v`
    #[inline]
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.a[i][j] * v[j];
            }
            out[i] = s;
        }
    }

    /// `out = Mᵀ v`
    #[inline]
    pub fn tr_mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            let mut s = 0.0;
            for i in 0..self.dim {
                s += self.a[i][j] * v[i];
            }
            out[j] = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.a[j][i] = self.a[i][j];
            }
        }
        t
    }

    pub fn mul(&self, other: &SmallMat) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = (0..self.dim).map(|k| self.a[i][k] * other.a[k][j]).sum();
            }
        }
        m
    }

    pub fn determinant(&self) -> f64 {
        let a = &self.a;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse via the adjugate; `None` when the matrix is (numerically) singular.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        let scale = self.max_abs().powi(self.dim as i32);
        if det == 0.0 || !det.is_finite() || det.abs() <= 1e-14 * scale {
            return None;
        }
        let a = &self.a;
        let mut m = Self::zeros(self.dim);
        match self.dim {
            1 => m.a[0][0] = 1.0 / a[0][0],
            2 => {
                m.a[0][0] = a[1][1] / det;
                m.a[0][1] = -a[0][1] / det;
                m.a[1][0] = -a[1][0] / det;
                m.a[1][1] = a[0][0] / det;
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                        let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                        m.a[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
                    }
                }
            }
        }
        Some(m)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.a[i][j] - self.a[j][i]).abs() <= tol))
    }

    /// `‖MᵀM − I‖_max ≤ tol`
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let p = self.transpose().mul(self);
        (0..self.dim).all(|i| (0..self.dim).all(|j| (p.a[i][j] - if i == j { 1.0 } else { 0.0 }).abs() <= tol))
    }

    /// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.a;
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..i {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric positive definite banded matrix stored by lower band, factorized
/// in place as `L Lᵀ`.
///
/// Row `i` holds entries `(i, i - bandwidth) ..= (i, i)`; entries that fall
/// before column 0 are unused.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandedCholesky {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` at `(i, j)`; only the lower triangle (`j ≤ i`) is stored.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j <= i { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place factorization; fails if a pivot is not positive.
    pub fn factorize(mut self) -> Result<Self> {
        let bw = self.bw;
        for j in 0..self.n {
            let j0 = j.saturating_sub(bw);
            let mut d = self.data[self.idx(j, j)];
            for k in j0..j {
                let l = self.data[self.idx(j, k)];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Computation {
                    message: format!("banded Cholesky pivot {j} not positive ({d})"),
                    best_lower_bound: d,
                });
            }
            let djj = d.sqrt();
            let kjj = self.idx(j, j);
            self.data[kjj] = djj;
            let imax = (j + bw).min(self.n - 1);
            for i in j + 1..=imax {
                let i0 = i.saturating_sub(bw).max(j0);
                let mut s = self.data[self.idx(i, j)];
                for k in i0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let kij = self.idx(i, j);
                self.data[kij] = s / djj;
            }
        }
        Ok(self)
    }

    /// Solves `L Lᵀ x = b` in place (the matrix must be factorized).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = b[i];
            let row = i * (bw + 1);
            let i0 = i.saturating_sub(bw);
            for k in i0..i {
                s -= self.data[row + bw - (i - k)] * b[k];
            }
            b[i] = s / self.data[row + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            let imax = (i + bw).min(n - 1);
            for k in i + 1..=imax {
                s -= self.data[k * (bw + 1) + bw - (k - i)] * b[k];
            }
            b[i] = s / self.data[i * (bw + 1) + bw];
        }
    }
}
