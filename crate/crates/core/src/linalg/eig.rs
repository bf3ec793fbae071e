use serde::{Deserialize, Serialize};

use super::lu::Lu;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use super::schur::{complex_schur, Schur};
use crate::error::Result;

/// Rescale a back-substituted vector once an entry exceeds this magnitude.
const RESCALE_AT: f64 = 1e150;

/// Right eigenpairs of a general complex matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors stored as columns.
    pub vectors: ComplexMatrix,
    /// `‖M v_i − ξ_i v_i‖₂ / ‖M‖_F` per pair.
    pub residuals: Vec<f64>,
    /// Largest eigenvalue condition number `‖row_i(V⁻¹)‖₂`; infinite when the
    /// eigenvector matrix is numerically singular.
    pub condition_estimate: f64,
    /// Inverse of `vectors` when it could be formed.
    pub vectors_inverse: Option<ComplexMatrix>,
}

impl EigDecomposition {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Eigenvectors of an upper triangular matrix by back-substitution; column
/// `k` has a unit entry at row `k` and zeros below it before normalisation.
/// Tiny pivots are perturbed as in LAPACK so defective blocks still yield
/// finite (nearly parallel) vectors.
pub(crate) fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.dim();
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n.max(1) as f64 / ulp);
    let mut x = ComplexMatrix::zeros(n);
    let mut col = vec![ZERO; n];
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (ulp * (lambda.re.abs() + lambda.im.abs())).max(smlnum);
        col[..=k].fill(ZERO);
        col[k] = ONE;
        for j in (0..k).rev() {
            let row = &t.row(j)[j + 1..=k];
            let s: C64 = row.iter().zip(&col[j + 1..=k]).map(|(a, b)| a * b).sum();
            let mut d = t[(j, j)] - lambda;
            if d.re.abs() + d.im.abs() < smin {
                d = C64::new(smin, 0.0);
            }
            let xj = -s / d;
            col[j] = xj;
            let mag = xj.norm();
            if mag > RESCALE_AT {
                let inv = 1.0 / mag;
                for c in &mut col[j..=k] {
                    *c *= inv;
                }
            }
        }
        for (r, &c) in col[..=k].iter().enumerate() {
            x[(r, k)] = c;
        }
    }
    x
}

pub(crate) fn normalize_columns(v: &mut ComplexMatrix) {
    let n = v.dim();
    let mut norms = vec![0.0; n];
    for r in 0..n {
        for (s, z) in norms.iter_mut().zip(v.row(r)) {
            *s += z.norm_sqr();
        }
    }
    let inv: Vec<f64> = norms.iter().map(|s| if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 }).collect();
    for r in 0..n {
        for (z, f) in v.row_mut(r).iter_mut().zip(&inv) {
            *z *= *f;
        }
    }
}

fn column_residuals(m: &ComplexMatrix, v: &ComplexMatrix, eigenvalues: &[C64]) -> Vec<f64> {
    let n = m.dim();
    let mv = m.matmul(v);
    let mut acc = vec![0.0; n];
    for r in 0..n {
        for (j, s) in acc.iter_mut().enumerate() {
            *s += (mv[(r, j)] - v[(r, j)] * eigenvalues[j]).norm_sqr();
        }
    }
    let scale = m.norm_fro();
    acc.into_iter()
        .map(|s| if scale > 0.0 { s.sqrt() / scale } else { s.sqrt() })
        .collect()
}

/// Assembles the decomposition from a Schur form of `m`.
pub(crate) fn eig_from_schur(m: &ComplexMatrix, schur: &Schur) -> EigDecomposition {
    let x = triangular_eigenvectors(&schur.t);
    let mut vectors = schur.z.matmul(&x);
    normalize_columns(&mut vectors);
    let eigenvalues = schur.t.diagonal();
    let residuals = column_residuals(m, &vectors, &eigenvalues);
    let vectors_inverse = Lu::new(&vectors).ok().map(|lu| lu.inverse()).filter(|w| w.is_finite());
    let condition_estimate = match &vectors_inverse {
        Some(w) => (0..w.dim())
            .map(|i| w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max),
        None => f64::INFINITY,
    };
    EigDecomposition {
        eigenvalues,
        vectors,
        residuals,
        condition_estimate,
        vectors_inverse,
    }
}

/// Eigendecomposition of a general square matrix. Defective or nearly
/// defective inputs still return pairs; their quality shows up in the
/// residuals and in `condition_estimate`.
pub fn eig_general(m: &ComplexMatrix) -> Result<EigDecomposition> {
    let schur = complex_schur(m)?;
    Ok(eig_from_schur(m, &schur))
}

/// Largest singular value, from the eigenvalues of `M†M`.
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    let g = m.adjoint().matmul(m);
    let top = super::schur::eigenvalues(&g)?.iter().map(|z| z.re).fold(0.0, f64::max);
    Ok(top.sqrt())
}
