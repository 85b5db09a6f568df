//! Small dense row-major matrices and a Cholesky factorization.
//!
//! Budgets stay in the low hundreds, so everything here is dense and
//! allocation-light rather than blocked or SIMD-tuned.

use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data: data.to_vec() })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    /// Lays `row` down `rows` times.
    pub fn repeat_row(rows: usize, row: &[T]) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row);
        }
        Self { rows, cols: row.len(), data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self · v`
    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        check_dim(self.cols, v.len())?;
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }

    /// `selfᵀ · v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        check_dim(self.rows, v.len())?;
        let mut out = vec![T::zero(); self.cols];
        for (r, &s) in self.row_iter().zip(v) {
            axpy(s, r, &mut out);
        }
        Ok(out)
    }

    pub fn mul_mat(&self, other: &Self) -> Result<Self> {
        check_dim(self.cols, other.rows)?;
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                axpy(a, other.row(k), dst);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`
    pub fn tr_mul_mat(&self, other: &Self) -> Result<Self> {
        check_dim(self.rows, other.rows)?;
        let mut out = Self::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let b = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                axpy(a, b, out.row_mut(i));
            }
        }
        Ok(out)
    }

    pub fn add_diagonal(&mut self, value: T) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] = self[(i, i)] + value;
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Overwrites the lower triangle with the upper one.
    pub fn symmetrize_from_upper(&mut self) {
        assert!(self.is_square());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                self[(j, i)] = self[(i, j)];
            }
        }
    }

    pub fn remove_row(&mut self, i: usize) {
        assert!(i < self.rows);
        self.data.drain(i * self.cols..(i + 1) * self.cols);
        self.rows -= 1;
    }

    pub fn push_row(&mut self, row: &[T]) -> Result<()> {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        check_dim(self.cols, row.len())?;
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// `y += a · x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * *xi;
    }
}

pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = *x - *y;
        acc + d * d
    })
}

/// Lower-triangular Cholesky factor `A = L Lᵀ` of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: DenseMatrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`, reading only its lower triangle.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
        }
        let n = a.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite {
                            index: i,
                            pivot: s.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix<T> {
        &self.lower
    }

    /// Solves `L z = b` in place.
    pub fn forward_substitute(&self, b: &mut [T]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.lower.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ z = b` in place.
    pub fn backward_substitute(&self, b: &mut [T]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let bi = b[i] / self.lower[(i, i)];
            b[i] = bi;
            let row = self.lower.row(i);
            for k in 0..i {
                b[k] = b[k] - row[k] * bi;
            }
        }
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        check_dim(self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        check_dim(self.dim(), b.rows())?;
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Explicit `A⁻¹`, exactly symmetric.
    pub fn inverse(&self) -> DenseMatrix<T> {
        let n = self.dim();
        // A⁻¹ = L⁻ᵀ L⁻¹; invert L first.
        let mut linv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            for i in j..n {
                let row = self.lower.row(i);
                let s = e[i] - dot(&row[j..i], &e[j..i]);
                e[i] = s / row[i];
            }
            for i in j..n {
                linv[(i, j)] = e[i];
            }
        }
        let mut inv = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                // Σ_k linv[k,i] linv[k,j], k ≥ j
                let mut s = T::zero();
                for k in j..n {
                    s = s + linv[(k, i)] * linv[(k, j)];
                }
                inv[(i, j)] = s;
            }
        }
        inv.symmetrize_from_upper();
        inv
    }

    pub fn log_determinant(&self) -> T {
        (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<T>() * T::lit(2.0)
    }
}
