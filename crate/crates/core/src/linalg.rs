//! Small dense matrices.
//!
//! Everything here operates on matrices with at most a few thousand entries
//! (density matrices of a handful of qubits, Pauli transfer matrices, the
//! square systems of the noise-model solve), so plain row-major storage and
//! textbook loops are the right tool.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::real::Real;

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == n_cols),
            "ragged rows in matrix literal"
        );
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<R>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, s: R) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-R::one()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(R::zero(), R::max)
    }

    pub fn diagonal(&self) -> Vec<R> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_off_diagonal(&self) -> R {
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    worst = worst.max(self[(i, j)].abs());
                }
            }
        }
        worst
    }
}

impl<R: Real> Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for Matrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Mul for &Matrix<R> {
    type Output = Matrix<R>;

    fn mul(self, rhs: &Matrix<R>) -> Matrix<R> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == R::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// Least-squares solution of `a x ≈ b` through Householder QR.
///
/// Returns `None` when `a` is (numerically) column-rank deficient.
pub fn lstsq<R: Real>(a: &Matrix<R>, b: &[R]) -> Option<Vec<R>> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    if n == 0 {
        return Some(Vec::new());
    }
    if m < n {
        return None;
    }
    let mut q = a.clone();
    let mut rhs = b.to_vec();
    let scale = a.data.iter().fold(R::zero(), |acc, v| acc.max(v.abs()));
    let tol = R::pivot_tolerance() * scale.max(R::one()) * R::of(m.max(n) as f64);

    for k in 0..n {
        let norm = (k..m).map(|i| q[(i, k)] * q[(i, k)]).sum::<R>().sqrt();
        if norm <= tol {
            return None;
        }
        let alpha = if q[(k, k)] > R::zero() { -norm } else { norm };
        let mut v: Vec<R> = (k..m).map(|i| q[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: R = v.iter().map(|&x| x * x).sum();
        if vnorm2 > R::zero() {
            for j in k..n {
                let dot: R = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
                let f = (dot + dot) / vnorm2;
                for i in k..m {
                    q[(i, j)] -= f * v[i - k];
                }
            }
            let dot: R = (k..m).map(|i| v[i - k] * rhs[i]).sum();
            let f = (dot + dot) / vnorm2;
            for i in k..m {
                rhs[i] -= f * v[i - k];
            }
        }
    }

    let mut x = vec![R::zero(); n];
    for k in (0..n).rev() {
        let s: R = ((k + 1)..n).map(|j| q[(k, j)] * x[j]).sum();
        x[k] = (rhs[k] - s) / q[(k, k)];
    }
    Some(x)
}

/// Row-major dense complex square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<R> {
    dim: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex<R>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_real_rows(rows: &[[f64; 2]; 2]) -> Self {
        Self::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&v| Complex::new(R::of(v), R::zero())).collect())
                .collect::<Vec<_>>(),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut out = Self::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        out[(i * other.dim + k, j * other.dim + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scaled(&self, s: Complex<R>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(R::zero(), R::max)
    }

    pub fn is_hermitian(&self, tol: R) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Distance to `other` after removing the best global phase.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> R {
        let overlap: Complex<R> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > R::zero() {
            overlap / Complex::new(overlap.norm(), R::zero())
        } else {
            Complex::one()
        };
        self.scaled(phase).max_abs_diff(other)
    }
}

impl<R: Real> Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        &self.data[i * self.dim + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[i * self.dim + j]
    }
}

impl<R: Real> Mul for &CMatrix<R> {
    type Output = CMatrix<R>;

    fn mul(self, rhs: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim, "matrix product shape mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}
