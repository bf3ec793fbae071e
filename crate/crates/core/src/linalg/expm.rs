use super::lu::Lu;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Degree-13 Padé numerator coefficients (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;
const MAX_SQUARINGS: i32 = 1000;

/// Matrix exponential. Strictly triangular input (the open-chain shift
/// operators and their band-matrix tensor products) is nilpotent and takes
/// the terminating Taylor series; everything else goes through Padé-13
/// scaling and squaring.
pub fn mat_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.ensure_finite()?;
    if m.is_strictly_upper() || m.is_strictly_lower() {
        nilpotent_series(m)
    } else {
        mat_exp_pade(m)
    }
}

fn nilpotent_series(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let norm = m.norm_one();
    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=n {
        term = m.matmul_sparse_left(&term).scale_real(1.0 / k as f64);
        if term.is_zero() {
            break;
        }
        sum += &term;
        if !sum.is_finite() {
            return Err(Error::Overflow { norm });
        }
        // Past k > ‖m‖ the terms decay geometrically, so a negligible term
        // bounds the remainder.
        if k as f64 > 2.0 * norm && term.norm_one() <= f64::EPSILON * 1e-3 * sum.norm_one() {
            break;
        }
    }
    Ok(sum)
}

/// Padé-13 scaling and squaring, used for general input.
pub fn mat_exp_pade(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.ensure_finite()?;
    let n = m.dim();
    let norm = m.norm_one();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if s > MAX_SQUARINGS {
        return Err(Error::Overflow { norm });
    }
    let a = m.scale_real(0.5f64.powi(s));
    let b = &PADE13;
    let id = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let combo = |c6: f64, c4: f64, c2: f64, c0: f64| {
        let mut r = a6.scale_real(c6);
        r += &a4.scale_real(c4);
        r += &a2.scale_real(c2);
        if c0 != 0.0 {
            r += &id.scale_real(c0);
        }
        r
    };
    let mut u_inner = a6.matmul(&combo(b[13], b[11], b[9], 0.0));
    u_inner += &combo(b[7], b[5], b[3], b[1]);
    let u = a.matmul(&u_inner);
    let mut v = a6.matmul(&combo(b[12], b[10], b[8], 0.0));
    v += &combo(b[6], b[4], b[2], b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::new(&q).map_err(|_| Error::Overflow { norm })?.solve(&p);
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow { norm });
    }
    Ok(r)
}
