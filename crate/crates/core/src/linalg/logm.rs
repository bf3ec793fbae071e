use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::eig::{eig_from_schur, EigDecomposition};
use super::matrix::{ComplexMatrix, C64, I, ONE, ZERO};
use super::schur::complex_schur;
use super::tolerances::Tolerances;
use crate::error::{Error, Result};

/// Square roots are taken until `‖T − I‖₁` drops below this.
const ISS_TARGET: f64 = 0.25;
const ISS_MAX_ROOTS: usize = 100;
const QUADRATURE_NODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogMethod {
    /// `V diag(E) V⁻¹` from the eigendecomposition.
    Eigen,
    /// Inverse scaling and squaring on the triangular Schur factor.
    Schur,
}

/// Generator `H = (i/T) log U` together with the spectral data used to
/// build it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixLog {
    pub generator: ComplexMatrix,
    /// Eigenvalues `ξ` of `U`, in the order of `eig`.
    pub eigenvalues: Vec<C64>,
    /// `E = (i/T) log ξ` with `Re E ∈ [−π/T, π/T)`.
    pub quasienergies: Vec<C64>,
    /// Eigenvalues within the flag tolerance of the branch cut.
    pub branch_flags: Vec<bool>,
    pub method: LogMethod,
    pub eig: EigDecomposition,
}

/// Maps a Floquet multiplier to its quasienergy on the principal zone.
/// Returns the quasienergy and whether `ξ` lies within the flag tolerance of
/// the cut; multipliers within the guard are placed on the `−π/T` edge.
pub fn quasienergy_from_eigenvalue(xi: C64, period: f64, tol: &Tolerances) -> (C64, bool) {
    let (arg, dist) = snapped_arg(xi, tol);
    (C64::new(-arg / period, xi.norm().ln() / period), dist <= tol.branch_flag)
}

/// Argument in `(−π, π]` with near-cut values snapped to `+π`, plus the
/// distance of the raw argument from the cut.
fn snapped_arg(xi: C64, tol: &Tolerances) -> (f64, f64) {
    let arg = xi.arg();
    let dist = PI - arg.abs();
    if dist <= tol.branch_guard {
        (PI, dist)
    } else {
        (arg, dist)
    }
}

fn snapped_log(xi: C64, tol: &Tolerances) -> C64 {
    C64::new(xi.norm().ln(), snapped_arg(xi, tol).0)
}

/// `H = (i/period) log u` with the default tolerances.
pub fn mat_log_unitary(u: &ComplexMatrix, period: f64) -> Result<ComplexMatrix> {
    Ok(mat_log_unitary_with(u, period, &Tolerances::default())?.generator)
}

/// `H = (i/period) log u`. The input need not be unitary; it only has to be
/// invertible. Well-conditioned spectra use the eigendecomposition, others
/// the Schur-form inverse scaling and squaring algorithm.
pub fn mat_log_unitary_with(u: &ComplexMatrix, period: f64, tol: &Tolerances) -> Result<MatrixLog> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let n = u.dim();
    let schur = complex_schur(u)?;
    let eig = eig_from_schur(u, &schur);
    let eigenvalues = eig.eigenvalues.clone();
    let floor = n as f64 * f64::EPSILON * u.norm_fro().max(f64::MIN_POSITIVE);
    if eigenvalues.iter().any(|xi| xi.norm() <= floor) {
        return Err(Error::Singular);
    }

    let mut quasienergies = Vec::with_capacity(n);
    let mut branch_flags = Vec::with_capacity(n);
    for &xi in &eigenvalues {
        let (e, flag) = quasienergy_from_eigenvalue(xi, period, tol);
        quasienergies.push(e);
        branch_flags.push(flag);
    }

    let (generator, method) = match &eig.vectors_inverse {
        Some(inv) if eig.condition_estimate <= tol.log_condition_max => {
            let mut scaled = eig.vectors.clone();
            for r in 0..n {
                for (x, e) in scaled.row_mut(r).iter_mut().zip(&quasienergies) {
                    *x *= e;
                }
            }
            (scaled.matmul(inv), LogMethod::Eigen)
        }
        _ => {
            let log_t = triangular_log(&schur.t, tol)?;
            let h = schur.z.matmul(&log_t).matmul(&schur.z.adjoint());
            (h.scale(I / period), LogMethod::Schur)
        }
    };
    if !generator.is_finite() {
        return Err(Error::Singular);
    }
    Ok(MatrixLog {
        generator,
        eigenvalues,
        quasienergies,
        branch_flags,
        method,
        eig,
    })
}

/// Logarithm of an upper triangular matrix by inverse scaling and squaring
/// with a Gauss–Legendre partial-fraction evaluation of `log(I + X)`.
///
/// The matrix is first rotated by `e^{−iθ}` with `θ` equal to the branch
/// guard so that eigenvalues sitting on the negative real axis are all taken
/// from the same side; the diagonal is then replaced by the exact snapped
/// logarithms.
fn triangular_log(t: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let n = t.dim();
    let theta = tol.branch_guard;
    let mut r = t.scale(C64::from_polar(1.0, -theta));
    let id = ComplexMatrix::identity(n);
    let mut roots = 0;
    while (&r - &id).norm_one() > ISS_TARGET {
        if roots == ISS_MAX_ROOTS {
            return Err(Error::NoConvergence { iterations: roots });
        }
        r = triangular_sqrt(&r);
        roots += 1;
    }
    let x = &r - &id;
    let (nodes, weights) = gauss_legendre_unit(QUADRATURE_NODES);
    let mut acc = ComplexMatrix::zeros(n);
    for (&node, &w) in nodes.iter().zip(&weights) {
        let mut a = x.scale_real(node);
        for i in 0..n {
            a[(i, i)] += ONE;
        }
        let y = upper_solve(&a, &x)?;
        acc += &y.scale_real(w);
    }
    let mut out = acc.scale_real(2f64.powi(roots as i32));
    for i in 0..n {
        out[(i, i)] = snapped_log(t[(i, i)], tol);
    }
    Ok(out)
}

/// Principal square root of an upper triangular matrix (Björck–Hammarling).
fn triangular_sqrt(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.dim();
    let mut r = ComplexMatrix::zeros(n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    let mut col = vec![ZERO; n];
    for j in 1..n {
        col[j] = r[(j, j)];
        for i in (0..j).rev() {
            let s: C64 = r.row(i)[i + 1..j]
                .iter()
                .zip(&col[i + 1..j])
                .map(|(a, b)| a * b)
                .sum();
            let mut d = r[(i, i)] + r[(j, j)];
            if d == ZERO {
                d = C64::new(f64::EPSILON, 0.0);
            }
            col[i] = (t[(i, j)] - s) / d;
        }
        for i in 0..j {
            r[(i, j)] = col[i];
        }
    }
    r
}

/// Solves `A Y = B` for upper triangular `A` and `B`.
fn upper_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    let mut y = ComplexMatrix::zeros(n);
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for i in (0..=j).rev() {
            let s: C64 = a.row(i)[i + 1..=j]
                .iter()
                .zip(&col[i + 1..=j])
                .map(|(p, q)| p * q)
                .sum();
            let d = a[(i, i)];
            if d == ZERO {
                return Err(Error::Singular);
            }
            col[i] = (b[(i, j)] - s) / d;
        }
        for i in 0..=j {
            y[(i, j)] = col[i];
        }
    }
    Ok(y)
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = (PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for l in 2..=m {
                let p2 = ((2 * l - 1) as f64 * x * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (x + 1.0));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_exp;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pseudo_random(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        ComplexMatrix::from_fn(n, |_, _| c(next(), next()))
    }

    #[test]
    fn quadrature_weights_integrate_polynomials() {
        let (x, w) = gauss_legendre_unit(QUADRATURE_NODES);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let cubic: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((cubic - 1.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn identity_gives_zero() {
        let h = mat_log_unitary(&ComplexMatrix::identity(4), 1.0).unwrap();
        assert!(h.max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_phases() {
        let u = ComplexMatrix::from_diagonal(&[C64::from_polar(1.0, -0.3), C64::from_polar(1.0, 0.3)]);
        let h = mat_log_unitary(&u, 1.0).unwrap();
        let expect = ComplexMatrix::from_diagonal(&[c(0.3, 0.0), c(-0.3, 0.0)]);
        assert!(h.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn cut_eigenvalue_goes_to_lower_edge_and_is_flagged() {
        let u = ComplexMatrix::from_diagonal(&[c(-1.0, -0.0), c(-1.0, 1e-13), c(1.0, 0.0)]);
        let log = mat_log_unitary_with(&u, 2.0, &Tolerances::default()).unwrap();
        for k in 0..2 {
            assert!((log.quasienergies[k].re + PI / 2.0).abs() < 1e-15);
            assert!(log.branch_flags[k]);
        }
        assert!(!log.branch_flags[2]);
    }

    #[test]
    fn schur_path_matches_eigen_path() {
        let n = 8;
        let h = pseudo_random(n, 3);
        let h = &h + &h.adjoint();
        let u = mat_exp(&h.scale(c(0.0, -0.4))).unwrap();
        let tol = Tolerances::default();
        let eigen = mat_log_unitary_with(&u, 1.0, &tol).unwrap();
        assert_eq!(eigen.method, LogMethod::Eigen);
        let forced = Tolerances {
            log_condition_max: 0.0,
            ..tol
        };
        let schur = mat_log_unitary_with(&u, 1.0, &forced).unwrap();
        assert_eq!(schur.method, LogMethod::Schur);
        assert!(eigen.generator.max_abs_diff(&schur.generator) < 1e-12);
        assert!(eigen.generator.max_abs_diff(&h.scale_real(0.4)) < 1e-12);
    }

    #[test]
    fn schur_path_on_defective_input() {
        // exp of a Jordan block: the eigenvector path is unusable here.
        let a = ComplexMatrix::from_rows(&[vec![c(0.0, -0.5), c(1.0, 0.0)], vec![ZERO, c(0.0, -0.5)]]).unwrap();
        let u = mat_exp(&a).unwrap();
        let log = mat_log_unitary_with(&u, 1.0, &Tolerances::default()).unwrap();
        assert_eq!(log.method, LogMethod::Schur);
        let back = mat_exp(&log.generator.scale(c(0.0, -1.0))).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn non_unitary_round_trip() {
        let n = 6;
        let g = pseudo_random(n, 17).scale_real(0.8);
        let u = mat_exp(&g).unwrap();
        let h = mat_log_unitary(&u, 1.5).unwrap();
        let back = mat_exp(&h.scale(c(0.0, -1.5))).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-11);
    }

    #[test]
    fn singular_input_rejected() {
        let u = ComplexMatrix::from_diagonal(&[ONE, ZERO]);
        assert!(matches!(mat_log_unitary(&u, 1.0), Err(Error::Singular)));
    }
}
