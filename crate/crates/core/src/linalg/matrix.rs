use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense square matrix of complex doubles stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from nested rows, rejecting ragged or non-square input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        let n = self.dim;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        for (i, &v) in col.iter().enumerate() {
            self.data[i * self.dim + j] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    pub fn into_row_major(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite)
        }
    }

    pub fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_strictly_upper(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| self.row(i)[..=i].iter().all(|z| *z == ZERO))
    }

    pub fn is_strictly_lower(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| self.row(i)[i..].iter().all(|z| *z == ZERO))
    }

    pub fn is_upper_triangular(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| self.row(i)[..i].iter().all(|z| *z == ZERO))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let n = self.dim;
        let mut sums = vec![0.0; n];
        for i in 0..n {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self * rhs` through the packed GEMM kernel.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        if n == 0 {
            return out;
        }
        // SAFETY: all three buffers hold n*n row-major elements and `out` does
        // not alias the inputs.
        unsafe {
            gemm_raw(
                n,
                n,
                n,
                ONE,
                self.data.as_ptr(),
                n,
                rhs.data.as_ptr(),
                n,
                ZERO,
                out.data.as_mut_ptr(),
                n,
            );
        }
        out
    }

    /// Product that skips structurally zero entries of `self`; cheap when
    /// `self` is banded or very sparse, as powers of shift operators are.
    pub fn matmul_sparse_left(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let (lhs_row, out_row) = (self.row(i), &mut out.data[i * n..(i + 1) * n]);
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(&rhs.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product `self ⊗ rhs` (self indexes the slow, outer factor).
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for p in 0..m {
                    for q in 0..m {
                        out[(i * m + p, j * m + q)] = a * rhs[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        &a.matmul(b) - &b.matmul(a)
    }

    /// `‖self - rhs‖_F`.
    pub fn distance(&self, rhs: &Self) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖self - self†‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `C = alpha * A * B + beta * C` on row-major blocks with the given row
/// strides; `A` is `m x k`, `B` is `k x n`.
///
/// # Safety
/// The pointers must address blocks of the stated shape and stride, and `c`
/// must not overlap `a` or `b`.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn gemm_raw(
    m: usize,
    k: usize,
    n: usize,
    alpha: C64,
    a: *const C64,
    rsa: usize,
    b: *const C64,
    rsb: usize,
    beta: C64,
    c: *mut C64,
    rsc: usize,
) {
    // Complex64 is repr(C) { re, im }, the same layout as `[f64; 2]`.
    matrixmultiply::zgemm(
        matrixmultiply::CGemmOption::Standard,
        matrixmultiply::CGemmOption::Standard,
        m,
        k,
        n,
        [alpha.re, alpha.im],
        a as *const [f64; 2],
        rsa as isize,
        1,
        b as *const [f64; 2],
        rsb as isize,
        1,
        [beta.re, beta.im],
        c as *mut [f64; 2],
        rsc as isize,
        1,
    );
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.map(|z| -z)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        let shown = self.dim.min(8);
        for i in 0..shown {
            let row: Vec<String> = self.row(i)[..shown]
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}{}]", row.join(", "), if shown < self.dim { ", …" } else { "" })?;
        }
        if shown < self.dim {
            writeln!(f, "  …")?;
        }
        Ok(())
    }
}
