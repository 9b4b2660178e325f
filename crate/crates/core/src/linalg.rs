//! Small dense linear algebra kit: a row-major matrix, Householder QR,
//! a cyclic Jacobi eigensolver for symmetric matrices and power iteration.
//!
//! Sizes in this crate stay in the low hundreds, so everything is plain
//! `Vec<f64>` storage with cache-friendly inner loops and no BLAS.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Returns `self + alpha * I`.
    pub fn add_diagonal(&self, alpha: f64) -> Matrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += alpha;
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * alpha).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest asymmetry `|a_ij - a_ji|` with its position.
    pub fn asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.2 || gap.is_nan() {
                    worst = (i, j, gap);
                }
            }
        }
        worst
    }

    /// Checks symmetry to `tol` relative to `max(1, max|a_ij|)`.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let (row, col, gap) = self.asymmetry();
        if gap.is_nan() || gap > tol * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { row, col, gap });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Inner product, accumulated in four interleaved partial sums.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Householder QR factorization of a square matrix, stored compactly in
/// column-major order: column `k` below the diagonal holds the k-th
/// reflector, entries above the diagonal hold `R`.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    n: usize,
    cols: Vec<f64>,
    r_diag: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut cols = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                cols[j * n + i] = a[(i, j)];
            }
        }
        let mut r_diag = vec![0.0; n];

        for k in 0..n {
            let (head, tail) = cols.split_at_mut((k + 1) * n);
            let vk = &mut head[k * n + k..];
            let mut nrm = norm2(vk);
            if nrm != 0.0 {
                if vk[0] < 0.0 {
                    nrm = -nrm;
                }
                for v in vk.iter_mut() {
                    *v /= nrm;
                }
                vk[0] += 1.0;
                let pivot = vk[0];
                for col in tail.chunks_exact_mut(n) {
                    let cj = &mut col[k..];
                    let s = -dot(vk, cj) / pivot;
                    for (c, v) in cj.iter_mut().zip(vk.iter()) {
                        *c += s * v;
                    }
                }
            }
            r_diag[k] = -nrm;
        }
        Ok(HouseholderQr { n, cols, r_diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn r_diagonal(&self) -> &[f64] {
        &self.r_diag
    }

    /// Solves `A x = b`. Any `|R_kk| < threshold` is reported as singular.
    pub fn solve(&self, b: &[f64], threshold: f64) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        for (pivot, &value) in self.r_diag.iter().enumerate() {
            if !(value.abs() >= threshold) {
                return Err(Error::SingularPivot {
                    pivot,
                    value,
                    threshold,
                });
            }
        }
        let mut x = b.to_vec();
        // x <- Q^T b
        for k in 0..n {
            let vk = &self.cols[k * n + k..(k + 1) * n];
            if vk[0] == 0.0 {
                continue;
            }
            let s = -dot(vk, &x[k..]) / vk[0];
            for (xi, v) in x[k..].iter_mut().zip(vk) {
                *xi += s * v;
            }
        }
        // back substitution with R, column oriented
        for k in (0..n).rev() {
            x[k] /= self.r_diag[k];
            let xk = x[k];
            let col = &self.cols[k * n..k * n + k];
            for (xi, r) in x[..k].iter_mut().zip(col) {
                *xi -= xk * r;
            }
        }
        Ok(x)
    }
}

/// Eigen-decomposition of a symmetric matrix; eigenvalues ascending, the
/// i-th column of `vectors` is the eigenvector of `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows()).map(|r| self.vectors[(r, i)]).collect()
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver. Iterates until the off-diagonal Frobenius
/// norm is negligible against the full norm.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    a.check_symmetric(1e-12)?;
    let n = a.rows();
    if n == 0 {
        return Err(Error::input("eigen-decomposition of an empty matrix"));
    }
    let mut m = a.clone();
    // symmetrize exactly so rotations stay consistent
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let total = m.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

const POWER_MAX_ITERS: usize = 100_000;

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
///
/// The estimate is `‖A v‖` for the current unit iterate, which converges to
/// `max |λ|` even when `λ` and `-λ` are both eigenvalues. Stops when the
/// relative change stays below `rel_tol` for three consecutive steps.
pub fn power_iteration_norm(a: &Matrix, rel_tol: f64) -> f64 {
    let n = a.rows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment to any axis
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract())
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut estimate = 0.0;
    let mut calm = 0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.matvec(&v);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let change = (nw - estimate).abs();
        estimate = nw;
        v = w.into_iter().map(|x| x / nw).collect();
        if change <= rel_tol * nw {
            calm += 1;
            if calm >= 3 {
                break;
            }
        } else {
            calm = 0;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, seed: u64) -> Matrix {
        let mut s = seed;
        Matrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn qr_solves_general_system() {
        let a = lcg_matrix(7, 3).add_diagonal(2.0);
        let x_true: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let b = a.matvec(&x_true);
        let x = HouseholderQr::new(&a).unwrap().solve(&b, 1e-14).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_reports_singular_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let err = HouseholderQr::new(&a).unwrap().solve(&[1.0, 1.0], 1e-10);
        assert!(matches!(err, Err(Error::SingularPivot { pivot: 1, .. })));
    }

    #[test]
    fn jacobi_on_small_cases() {
        let e = symmetric_eigen(&Matrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);

        let a = Matrix::from_rows(&[[0.0, 1.0], [1.0, 1.0]]).unwrap();
        let e = symmetric_eigen(&a).unwrap();
        assert!((e.values[0] - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((e.values[1] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let b = lcg_matrix(6, 11);
        let a = b.matmul(&b.transpose()).add_diagonal(-0.3);
        let e = symmetric_eigen(&a).unwrap();
        let lam = Matrix::from_fn(6, 6, |i, j| if i == j { e.values[i] } else { 0.0 });
        let back = e.vectors.matmul(&lam).matmul(&e.vectors.transpose());
        for i in 0..6 {
            for j in 0..6 {
                assert!((back[(i, j)] - a[(i, j)]).abs() < 1e-12);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn asymmetric_input_rejected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn power_iteration_handles_plus_minus_pair() {
        let a = Matrix::from_rows(&[[0.0, 2.0], [2.0, 0.0]]).unwrap();
        assert!((power_iteration_norm(&a, 1e-12) - 2.0).abs() < 1e-12);
    }
}
