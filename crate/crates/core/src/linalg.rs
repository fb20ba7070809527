//! Minimal dense linear algebra: a row-major matrix, a Cholesky factorization
//! for symmetric positive definite systems, and slice-level vector helpers.
//!
//! The solvers only ever factor small-to-moderate SPD matrices (the `m x m`
//! Newton/ADMM systems and the `(r+r2) x (r+r2)` Woodbury Gram matrix), so a
//! self-contained implementation keeps the whole crate generic over [`FloatT`]
//! without an external LAPACK binding.

use crate::error::{Result, SglError};
use crate::float::FloatT;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: FloatT> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Symmetric rank-1 update `self += coef * v v^T` (full matrix).
    pub fn syr(&mut self, coef: T, v: &[T]) {
        assert_eq!(self.rows, self.cols);
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            let ci = coef * v[i];
            if ci == T::zero() {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (rj, &vj) in row.iter_mut().zip(v) {
                *rj += ci * vj;
            }
        }
    }

    pub fn max_abs_asymmetry(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Cholesky factorization `self = L L^T`; fails if the matrix is not
    /// (numerically) positive definite.
    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= T::zero() || !d.is_finite() {
                return Err(SglError::Numeric(format!(
                    "cholesky pivot {d} at column {j}: matrix not positive definite"
                )));
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Cholesky { n, l })
    }
}

impl<T: FloatT> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: FloatT> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: FloatT> Cholesky<T> {
    /// Solves `A x = rhs` for the factored `A`.
    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut x = rhs.to_vec();
        // forward: L w = rhs
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        // backward: L^T x = w
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}

/// Dense column block (column-major), as produced by design-matrix gathers.
#[derive(Debug, Clone)]
pub struct ColBlock<T> {
    m: usize,
    data: Vec<T>,
}

impl<T: FloatT> ColBlock<T> {
    pub fn zeros(m: usize, k: usize) -> Self {
        ColBlock {
            m,
            data: vec![T::zero(); m * k],
        }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.data.len() / self.m
        }
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn push_col(&mut self, col: &[T]) {
        assert_eq!(col.len(), self.m);
        self.data.extend_from_slice(col);
    }

    /// `out += self * x`.
    pub fn accumulate_matvec(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.ncols());
        assert_eq!(out.len(), self.m);
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            axpy(xj, self.col(j), out);
        }
    }

    /// Returns `self^T h`.
    pub fn adjoint_matvec(&self, h: &[T]) -> Vec<T> {
        assert_eq!(h.len(), self.m);
        (0..self.ncols()).map(|j| dot(self.col(j), h)).collect()
    }
}

#[inline]
pub fn dot<T: FloatT>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm2<T: FloatT>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm1<T: FloatT>(a: &[T]) -> T {
    a.iter().map(|x| x.abs()).sum()
}

#[inline]
pub fn norm_inf<T: FloatT>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// `y += alpha * x`.
#[inline]
pub fn axpy<T: FloatT>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub<T: FloatT>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn dist2<T: FloatT>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = M M^T + I with a fixed M.
        let m = Mat::from_rows(vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.5, 0.0, 1.0],
        ]);
        let mut a = Mat::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] += dot(m.row(i), m.row(j));
            }
        }
        let x_true = vec![1.0f64, -2.0, 0.5];
        let rhs = a.matvec(&x_true);
        let x = a.cholesky().unwrap().solve(&rhs);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = Mat::identity(2);
        a[(1, 1)] = -1.0;
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn colblock_matvec_roundtrip() {
        let mut b = ColBlock::zeros(3, 0);
        b.push_col(&[1.0, 0.0, 2.0]);
        b.push_col(&[0.0, 1.0, -1.0]);
        let mut out = vec![0.0; 3];
        b.accumulate_matvec(&[2.0, 3.0], &mut out);
        assert_eq!(out, vec![2.0, 3.0, 1.0]);
        assert_eq!(b.adjoint_matvec(&[1.0, 1.0, 1.0]), vec![3.0, 0.0]);
    }
}
