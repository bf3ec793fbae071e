use super::matrix::{gemm_raw, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// LU factorisation with partial pivoting, `P A = L U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: ComplexMatrix,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        a.ensure_finite()?;
        let n = a.dim();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;

        let mut k0 = 0;
        while k0 < n {
            let k1 = (k0 + BLOCK).min(n);
            // Panel factorisation; swaps are applied to whole rows.
            for j in k0..k1 {
                let p = (j..n)
                    .max_by(|&x, &y| {
                        lu[(x, j)]
                            .norm_sqr()
                            .partial_cmp(&lu[(y, j)].norm_sqr())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .unwrap_or(j);
                let pivot = lu[(p, j)];
                if pivot == ZERO {
                    return Err(Error::Singular);
                }
                if p != j {
                    swap_rows(&mut lu, p, j);
                    perm.swap(p, j);
                    swaps += 1;
                }
                let inv = ONE / pivot;
                let (top, bottom) = lu.as_mut_slice().split_at_mut((j + 1) * n);
                let pivot_row = &top[j * n + j + 1..j * n + k1];
                for row in bottom.chunks_exact_mut(n) {
                    let l = row[j] * inv;
                    row[j] = l;
                    if l != ZERO {
                        for (x, &u) in row[j + 1..k1].iter_mut().zip(pivot_row) {
                            *x -= l * u;
                        }
                    }
                }
            }
            if k1 < n {
                // U12 = L11^{-1} A12.
                for j in k0..k1 {
                    let (top, bottom) = lu.as_mut_slice().split_at_mut((j + 1) * n);
                    let src = &top[j * n + k1..(j + 1) * n];
                    for i in (j + 1)..k1 {
                        let row = &mut bottom[(i - j - 1) * n..(i - j) * n];
                        let l = row[j];
                        if l != ZERO {
                            for (x, &u) in row[k1..].iter_mut().zip(src) {
                                *x -= l * u;
                            }
                        }
                    }
                }
                // A22 -= L21 U12.
                let base = lu.as_mut_slice().as_mut_ptr();
                // SAFETY: L21 (rows k1.., cols k0..k1), U12 (rows k0..k1,
                // cols k1..) and A22 (rows k1.., cols k1..) are disjoint blocks
                // of the same n x n buffer.
                unsafe {
                    gemm_raw(
                        n - k1,
                        k1 - k0,
                        n - k1,
                        -ONE,
                        base.add(k1 * n + k0),
                        n,
                        base.add(k0 * n + k1),
                        n,
                        ONE,
                        base.add(k1 * n + k1),
                        n,
                    );
                }
            }
            k0 = k1;
        }
        if !lu.is_finite() {
            return Err(Error::Singular);
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn det(&self) -> C64 {
        let d: C64 = self.lu.diagonal().into_iter().product();
        if self.swaps % 2 == 1 {
            -d
        } else {
            d
        }
    }

    /// Smallest and largest pivot magnitudes.
    pub fn pivot_range(&self) -> (f64, f64) {
        self.lu
            .diagonal()
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), z| (lo.min(z.norm()), hi.max(z.norm())))
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.dim();
        assert_eq!(b.dim(), n, "solve dimension mismatch");
        let mut x = ComplexMatrix::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    pub fn inverse(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut x = ComplexMatrix::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[(i, p)] = ONE;
        }
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    /// Blocked unit-lower triangular solve, row-oriented.
    fn forward_in_place(&self, x: &mut ComplexMatrix) {
        let n = self.dim();
        let mut b0 = 0;
        while b0 < n {
            let b1 = (b0 + BLOCK).min(n);
            if b0 > 0 {
                let xp = x.as_mut_slice().as_mut_ptr();
                // SAFETY: rows b0..b1 of X are written, rows 0..b0 are read,
                // and L is a separate buffer.
                unsafe {
                    gemm_raw(
                        b1 - b0,
                        b0,
                        n,
                        -ONE,
                        self.lu.as_slice().as_ptr().add(b0 * n),
                        n,
                        xp,
                        n,
                        ONE,
                        xp.add(b0 * n),
                        n,
                    );
                }
            }
            for i in b0..b1 {
                let (done, rest) = x.as_mut_slice().split_at_mut(i * n);
                let target = &mut rest[..n];
                for k in b0..i {
                    let l = self.lu[(i, k)];
                    if l != ZERO {
                        for (t, &s) in target.iter_mut().zip(&done[k * n..(k + 1) * n]) {
                            *t -= l * s;
                        }
                    }
                }
            }
            b0 = b1;
        }
    }

    /// Blocked upper triangular solve, row-oriented.
    fn backward_in_place(&self, x: &mut ComplexMatrix) {
        let n = self.dim();
        let mut b1 = n;
        while b1 > 0 {
            let b0 = b1.saturating_sub(BLOCK);
            if b1 < n {
                let xp = x.as_mut_slice().as_mut_ptr();
                // SAFETY: rows b0..b1 of X are written, rows b1..n are read.
                unsafe {
                    gemm_raw(
                        b1 - b0,
                        n - b1,
                        n,
                        -ONE,
                        self.lu.as_slice().as_ptr().add(b0 * n + b1),
                        n,
                        xp.add(b1 * n),
                        n,
                        ONE,
                        xp.add(b0 * n),
                        n,
                    );
                }
            }
            for i in (b0..b1).rev() {
                let (head, done) = x.as_mut_slice().split_at_mut((i + 1) * n);
                let target = &mut head[i * n..];
                for k in (i + 1)..b1 {
                    let u = self.lu[(i, k)];
                    if u != ZERO {
                        let src = &done[(k - i - 1) * n..(k - i) * n];
                        for (t, &s) in target.iter_mut().zip(src) {
                            *t -= u * s;
                        }
                    }
                }
                let inv = ONE / self.lu[(i, i)];
                for t in target.iter_mut() {
                    *t *= inv;
                }
            }
            b1 = b0;
        }
    }
}

fn swap_rows(m: &mut ComplexMatrix, a: usize, b: usize) {
    let n = m.dim();
    let (lo, hi) = (a.min(b), a.max(b));
    let (first, second) = m.as_mut_slice().split_at_mut(hi * n);
    first[lo * n..(lo + 1) * n].swap_with_slice(&mut second[..n]);
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(Lu::new(a)?.inverse())
}

pub fn det(a: &ComplexMatrix) -> Result<C64> {
    match Lu::new(a) {
        Ok(lu) => Ok(lu.det()),
        Err(Error::Singular) => Ok(ZERO),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, |i, j| {
            let x = ((i * 31 + j * 17) % 23) as f64 / 23.0 - 0.5;
            let y = ((i * 7 + j * 13) % 19) as f64 / 19.0 - 0.5;
            C64::new(x, y) + if i == j { C64::new(0.3, 0.0) } else { ZERO }
        })
    }

    #[test]
    fn inverse_across_block_boundaries() {
        for n in [1, 5, 64, 65, 150] {
            let a = test_matrix(n);
            let inv = inverse(&a).unwrap();
            let err = a.matmul(&inv).max_abs_diff(&ComplexMatrix::identity(n));
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn determinant_of_permutation_and_diagonal() {
        let p = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((det(&p).unwrap() + ONE).norm() < 1e-15);
        let d = ComplexMatrix::from_diagonal(&[C64::new(2.0, 0.0), C64::new(0.0, 3.0)]);
        assert!((det(&d).unwrap() - C64::new(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_reported() {
        let s = ComplexMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::new(&s), Err(Error::Singular)));
        assert_eq!(det(&s).unwrap(), ZERO);
    }

    #[test]
    fn solve_vector_matches_matrix_solve() {
        let a = test_matrix(9);
        let b: Vec<C64> = (0..9).map(|i| C64::new(i as f64, 1.0)).collect();
        let x = Lu::new(&a).unwrap().solve_vec(&b);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).norm() < 1e-11);
        }
    }
}
