//! Dense row-major matrix of `f64` with the handful of kernels the lab
//! needs: matrix-vector products on both sides, rank-one updates, norms,
//! and a power-iteration spectral norm.

use super::linalg::{dot, norm};
use super::rng::RngStream;
use crate::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be strictly positive");
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return invalid("from_rows: empty matrix");
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("from_rows: ragged rows");
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    /// Entries i.i.d. `N(0, std^2)`.
    pub fn gaussian(rows: usize, cols: usize, std: f64, rng: &mut RngStream) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        rng.fill_normal(&mut m.data, std);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// y = M x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.rows);
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *yi = dot(row, x);
        }
    }

    /// y = M^T x (equivalently x^T M read as a column vector).
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_t dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for (xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            if *xi != 0.0 {
                for (yj, mij) in y.iter_mut().zip(row) {
                    *yj += xi * mij;
                }
            }
        }
        y
    }

    /// M += alpha * u v^T.
    pub fn rank_one_update(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (ui, row) in u.iter().zip(self.data.chunks_exact_mut(self.cols)) {
            let a = alpha * ui;
            if a != 0.0 {
                for (mij, vj) in row.iter_mut().zip(v) {
                    *mij += a * vj;
                }
            }
        }
    }

    /// M += alpha * N.
    pub fn add_scaled(&mut self, other: &Matrix, alpha: f64) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in self.data.iter_mut() {
            *a *= alpha;
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The ell_q norm over rows of the row-wise ell_p norms; p, q in {2, inf}
    /// (inf passed as `f64::INFINITY`). With p = q = 2 this is the Frobenius
    /// norm.
    pub fn row_norm_p_q(&self, p: f64, q: f64) -> Result<f64> {
        let ok = |v: f64| v == 2.0 || v == f64::INFINITY;
        if !ok(p) || !ok(q) {
            return invalid("row_norm_p_q: p and q must be 2 or infinity");
        }
        let row_norms: Vec<f64> = self
            .data
            .chunks_exact(self.cols)
            .map(|row| {
                if p == 2.0 {
                    norm(row)
                } else {
                    row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
                }
            })
            .collect();
        Ok(if q == 2.0 {
            norm(&row_norms)
        } else {
            row_norms.iter().fold(0.0_f64, |acc, v| acc.max(*v))
        })
    }

    /// Largest singular value, by power iteration on M^T M, to relative
    /// tolerance `tol`. Deterministic given the stream.
    pub fn spectral_norm(&self, tol: f64, rng: &mut RngStream) -> Result<f64> {
        if !self.is_finite() {
            return Err(Error::NonFinite("spectral_norm input".into()));
        }
        let mut v = rng.unit_vector(self.cols);
        let mut prev = 0.0_f64;
        let mut buf = vec![0.0; self.rows];
        for _ in 0..20_000 {
            self.matvec_into(&v, &mut buf);
            let sigma = norm(&buf);
            if sigma == 0.0 {
                return Ok(0.0);
            }
            let w = self.matvec_t(&buf);
            let wn = norm(&w);
            if wn == 0.0 {
                return Ok(sigma);
            }
            v = w.into_iter().map(|x| x / wn).collect();
            if (sigma - prev).abs() <= tol * sigma {
                return Ok(sigma);
            }
            prev = sigma;
        }
        Ok(prev)
    }
}
