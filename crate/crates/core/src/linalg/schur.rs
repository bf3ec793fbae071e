//! Complex Schur decomposition: Householder reduction to Hessenberg form
//! followed by single-shift QR iteration with Givens-like 2x2 reflectors.
//!
//! The iteration follows the small-matrix LAPACK strategy (Wilkinson shifts,
//! exceptional shifts after stagnation, the "two small subdiagonals" restart).
//! Updates outside the active window are deferred to the end of each sweep
//! and applied row by row so the row-major storage is streamed contiguously.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const EXCEPTIONAL_PERIOD: usize = 10;

#[derive(Debug, Clone)]
pub struct Schur {
    /// Upper triangular factor.
    pub t: ComplexMatrix,
    /// Unitary factor with `A = Z T Z†`.
    pub z: ComplexMatrix,
}

#[inline]
fn cabs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces `a` to upper Hessenberg form in place. When `z` is given it is
/// right-multiplied by the accumulated reflectors.
pub fn hessenberg(a: &mut ComplexMatrix, z: Option<&mut ComplexMatrix>) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were detected at runtime.
        unsafe { hessenberg_avx2(a, z) };
        return;
    }
    hessenberg_impl(a, z);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn hessenberg_avx2(a: &mut ComplexMatrix, z: Option<&mut ComplexMatrix>) {
    hessenberg_impl(a, z);
}

#[inline(always)]
fn hessenberg_impl(a: &mut ComplexMatrix, mut z: Option<&mut ComplexMatrix>) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let v = &mut v[..len];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = a[(k + 1 + i, k)];
        }
        let tail: f64 = v[1..].iter().map(|x| x.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (v[0].norm_sqr() + tail).sqrt();
        let phase = if v[0] == ZERO { ONE } else { v[0] / v[0].norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|x| x.norm_sqr()).sum::<f64>();

        // Left: rows k+1.., columns k+1.. (column k is set explicitly).
        let w = &mut w[..n - k - 1];
        w.fill(ZERO);
        for (i, vi) in v.iter().enumerate() {
            let vc = vi.conj();
            for (wj, &x) in w.iter_mut().zip(&a.row(k + 1 + i)[k + 1..]) {
                *wj += vc * x;
            }
        }
        for (i, &vi) in v.iter().enumerate() {
            let s = vi * beta;
            for (x, &wj) in a.row_mut(k + 1 + i)[k + 1..].iter_mut().zip(w.iter()) {
                *x -= s * wj;
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }

        // Right: all rows, columns k+1..
        let apply_right = |row: &mut [C64]| {
            let seg = &mut row[k + 1..];
            let s: C64 = seg.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<C64>() * beta;
            for (x, vi) in seg.iter_mut().zip(v.iter()) {
                *x -= s * vi.conj();
            }
        };
        for r in 0..n {
            apply_right(a.row_mut(r));
        }
        if let Some(z) = z.as_deref_mut() {
            for r in 0..n {
                apply_right(z.row_mut(r));
            }
        }
    }
}

/// Elementary similarity recorded during a sweep for deferred application
/// outside the active window.
#[derive(Clone, Copy)]
enum Op {
    /// Reflector `I − t1 u u†` with `u = (1, v2)` acting on indices `k, k+1`.
    Reflect { k: usize, t1: C64, t2: C64, v2: C64 },
    /// Diagonal similarity: column `j` scaled by `d`, row `j` by `conj(d)`.
    Scale { j: usize, d: C64 },
}

#[inline(always)]
fn apply_op_right(row: &mut [C64], op: &Op) {
    match *op {
        Op::Reflect { k, t1, t2, v2 } => {
            let sum = t1 * row[k] + t2 * row[k + 1];
            row[k] -= sum;
            row[k + 1] -= sum * v2.conj();
        }
        Op::Scale { j, d } => row[j] *= d,
    }
}

/// Transforms recorded during one or more sweeps on the window `l..=i`.
struct Segment {
    l: usize,
    i: usize,
    ops: std::ops::Range<usize>,
}

/// Similarity transforms waiting to be applied outside their windows.
///
/// Nothing in later sweeps reads the deferred regions (rows above a window,
/// columns right of it, the Schur vectors), and left and right updates
/// commute, so the transforms can be batched and replayed in order.
struct Deferred {
    ops: Vec<Op>,
    segments: Vec<Segment>,
    threshold: usize,
}

const ROW_GROUP: usize = 4;
const COL_CHUNK: usize = 32;

impl Deferred {
    fn new(n: usize) -> Self {
        Self {
            ops: Vec::new(),
            segments: Vec::new(),
            threshold: (16 * n).max(512),
        }
    }

    fn close_segment(&mut self, l: usize, i: usize, start: usize) {
        let end = self.ops.len();
        if start == end {
            return;
        }
        match self.segments.last_mut() {
            Some(seg) if seg.l == l && seg.i == i && seg.ops.end == start => seg.ops.end = end,
            _ => self.segments.push(Segment { l, i, ops: start..end }),
        }
    }

    fn flush_if_full(&mut self, h: &mut ComplexMatrix, zt: Option<&mut ComplexMatrix>) {
        if self.ops.len() >= self.threshold {
            self.flush(h, zt);
        }
    }

    /// `zt` holds the Schur vectors transposed, so right-multiplying them
    /// becomes a row operation.
    fn flush(&mut self, h: &mut ComplexMatrix, zt: Option<&mut ComplexMatrix>) {
        if self.ops.is_empty() {
            return;
        }
        apply_right_batch(h, &self.segments, &self.ops, |seg| seg.l);
        apply_row_ops(h, &self.segments, &self.ops, |seg| seg.i + 1, true);
        if let Some(zt) = zt {
            apply_row_ops(zt, &self.segments, &self.ops, |_| 0, false);
        }
        self.ops.clear();
        self.segments.clear();
    }
}

/// Replays the ops as row operations on columns `first_col(seg)..` of `m`,
/// one chunk of columns at a time so the touched rows stay in cache. With
/// `adjoint` the ops act as left multiplication by their adjoints; otherwise
/// they act on a transposed operand that is being right-multiplied.
fn apply_row_ops(
    m: &mut ComplexMatrix,
    segments: &[Segment],
    ops: &[Op],
    first_col: impl Fn(&Segment) -> usize,
    adjoint: bool,
) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were detected at runtime.
        unsafe { apply_row_ops_avx2(m, segments, ops, first_col, adjoint) };
        return;
    }
    apply_row_ops_impl(m, segments, ops, first_col, adjoint);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn apply_row_ops_avx2(
    m: &mut ComplexMatrix,
    segments: &[Segment],
    ops: &[Op],
    first_col: impl Fn(&Segment) -> usize,
    adjoint: bool,
) {
    apply_row_ops_impl(m, segments, ops, first_col, adjoint);
}

#[inline(always)]
fn apply_row_ops_impl(
    m: &mut ComplexMatrix,
    segments: &[Segment],
    ops: &[Op],
    first_col: impl Fn(&Segment) -> usize,
    adjoint: bool,
) {
    let n = m.dim();
    let data = m.as_mut_slice();
    let mut c0 = segments.iter().map(&first_col).min().unwrap_or(n);
    while c0 < n {
        let c1 = (c0 + COL_CHUNK).min(n);
        for seg in segments {
            let lo = c0.max(first_col(seg));
            if lo >= c1 {
                continue;
            }
            for op in &ops[seg.ops.clone()] {
                match *op {
                    Op::Reflect { k, t1, t2, v2 } => {
                        let (a1, a2, w) = if adjoint {
                            (t1.conj(), t2.conj(), v2)
                        } else {
                            (t1, t2, v2.conj())
                        };
                        let (upper, lower) = data.split_at_mut((k + 1) * n);
                        let rk = &mut upper[k * n + lo..k * n + c1];
                        let rk1 = &mut lower[lo..c1];
                        for (a, b) in rk.iter_mut().zip(rk1.iter_mut()) {
                            let sum = a1 * *a + a2 * *b;
                            *a -= sum;
                            *b -= sum * w;
                        }
                    }
                    Op::Scale { j, d } => {
                        let f = if adjoint { d.conj() } else { d };
                        for x in &mut data[j * n + lo..j * n + c1] {
                            *x *= f;
                        }
                    }
                }
            }
        }
        c0 = c1;
    }
}

/// Replays right-multiplications on the rows of `m`; a segment touches rows
/// `0..limit(seg)`. Several rows are processed together so that the serial
/// dependency between consecutive reflectors overlaps across rows.
fn apply_right_batch(m: &mut ComplexMatrix, segments: &[Segment], ops: &[Op], limit: impl Fn(&Segment) -> usize) {
    let n = m.dim();
    let max_rows = segments.iter().map(&limit).max().unwrap_or(0);
    for (g, block) in m.as_mut_slice()[..max_rows * n].chunks_mut(ROW_GROUP * n).enumerate() {
        let r0 = g * ROW_GROUP;
        let mut rows: Vec<&mut [C64]> = block.chunks_mut(n).collect();
        for seg in segments {
            let active = limit(seg).saturating_sub(r0).min(rows.len());
            if active == 0 {
                continue;
            }
            let seg_ops = &ops[seg.ops.clone()];
            if active == ROW_GROUP {
                if let [a, b, c, d] = &mut rows[..] {
                    for op in seg_ops {
                        apply_op_right(a, op);
                        apply_op_right(b, op);
                        apply_op_right(c, op);
                        apply_op_right(d, op);
                    }
                    continue;
                }
            }
            for row in rows[..active].iter_mut() {
                for op in seg_ops {
                    apply_op_right(row, op);
                }
            }
        }
    }
}

/// 2-element Householder generator: returns `(beta, v2, tau)` such that
/// `(I − tau u u†)† (alpha, x)ᵀ = (beta, 0)ᵀ` with `u = (1, v2)`.
#[inline]
fn larfg2(alpha: C64, x: C64) -> (C64, C64, C64) {
    let xnorm = x.norm();
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (alpha, x, ZERO);
    }
    let norm = (alpha.re.hypot(alpha.im)).hypot(xnorm);
    let beta = if alpha.re >= 0.0 { -norm } else { norm };
    let tau = C64::new((beta - alpha.re) / beta, -alpha.im / beta);
    let scale = ONE / (alpha - beta);
    (C64::new(beta, 0.0), x * scale, tau)
}

/// QR iteration on an upper Hessenberg matrix. With `zt` (the transposed
/// Schur vectors) present the full triangular form is produced; otherwise
/// only the active windows are iterated and just the eigenvalues are
/// meaningful.
fn hessenberg_qr(h: &mut ComplexMatrix, zt: Option<&mut ComplexMatrix>) -> Result<Vec<C64>> {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
        // SAFETY: the required CPU features were detected at runtime.
        return unsafe { hessenberg_qr_avx2(h, zt) };
    }
    hessenberg_qr_impl(h, zt)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn hessenberg_qr_avx2(h: &mut ComplexMatrix, zt: Option<&mut ComplexMatrix>) -> Result<Vec<C64>> {
    hessenberg_qr_impl(h, zt)
}

#[inline(always)]
fn hessenberg_qr_impl(h: &mut ComplexMatrix, mut zt: Option<&mut ComplexMatrix>) -> Result<Vec<C64>> {
    let n = h.dim();
    let want_t = zt.is_some();
    let mut w = vec![ZERO; n];
    if n == 0 {
        return Ok(w);
    }
    if n == 1 {
        w[0] = h[(0, 0)];
        return Ok(w);
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);

    // Make the subdiagonal real.
    for i in 1..n {
        let sub = h[(i, i - 1)];
        if sub.im != 0.0 {
            let sc = sub / cabs1(sub);
            let sc = sc.conj() / sc.norm();
            h[(i, i - 1)] = C64::new(sub.norm(), 0.0);
            for x in &mut h.row_mut(i)[i..] {
                *x *= sc;
            }
            let cs = sc.conj();
            for r in 0..=(i + 1).min(n - 1) {
                h[(r, i)] *= cs;
            }
            if let Some(zt) = zt.as_deref_mut() {
                for x in zt.row_mut(i) {
                    *x *= cs;
                }
            }
        }
    }

    let itmax = 30 * n.max(10);
    let mut kdefl = 0usize;
    let mut deferred = Deferred::new(n);
    let mut i = n - 1;
    loop {
        let mut l = 0usize;
        let mut converged = false;
        for _its in 0..=itmax {
            // Look for a single small subdiagonal element.
            let mut k = i;
            while k > l {
                let sub = h[(k, k - 1)];
                if cabs1(sub) <= smlnum {
                    break;
                }
                let mut tst = cabs1(h[(k - 1, k - 1)]) + cabs1(h[(k, k)]);
                if tst == 0.0 {
                    if k >= 2 {
                        tst += h[(k - 1, k - 2)].re.abs();
                    }
                    if k + 1 < n {
                        tst += h[(k + 1, k)].re.abs();
                    }
                }
                if sub.re.abs() <= ulp * tst {
                    let sup = h[(k - 1, k)];
                    let ab = cabs1(sub).max(cabs1(sup));
                    let ba = cabs1(sub).min(cabs1(sup));
                    let diff = h[(k - 1, k - 1)] - h[(k, k)];
                    let aa = cabs1(h[(k, k)]).max(cabs1(diff));
                    let bb = cabs1(h[(k, k)]).min(cabs1(diff));
                    let s = aa + ab;
                    if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                        break;
                    }
                }
                k -= 1;
            }
            l = k;
            if l > 0 {
                h[(l, l - 1)] = ZERO;
            }
            if l >= i {
                converged = true;
                break;
            }
            kdefl += 1;

            // Shift.
            let t = if kdefl % (2 * EXCEPTIONAL_PERIOD) == 0 {
                C64::new(0.75 * h[(i, i - 1)].re.abs(), 0.0) + h[(i, i)]
            } else if kdefl % EXCEPTIONAL_PERIOD == 0 {
                C64::new(0.75 * h[(l + 1, l)].re.abs(), 0.0) + h[(l, l)]
            } else {
                let mut t = h[(i, i)];
                let u = h[(i - 1, i)].sqrt() * h[(i, i - 1)].sqrt();
                let s = cabs1(u);
                if s != 0.0 {
                    let x = (h[(i - 1, i - 1)] - t) * 0.5;
                    let sx = cabs1(x);
                    let s = s.max(sx);
                    let mut y = ((x / s) * (x / s) + (u / s) * (u / s)).sqrt() * s;
                    if sx > 0.0 {
                        let xs = x / sx;
                        if xs.re * y.re + xs.im * y.im < 0.0 {
                            y = -y;
                        }
                    }
                    t -= u * (u / (x + y));
                }
                t
            };

            // Look for two consecutive small subdiagonal elements.
            let start_vector = |h: &ComplexMatrix, m: usize| {
                let h11s = h[(m, m)] - t;
                let h21 = h[(m + 1, m)].re;
                let s = cabs1(h11s) + h21.abs();
                (h11s / s, h21 / s)
            };
            let mut m = l;
            let (mut v0, mut v1) = start_vector(h, l);
            for mm in (l + 1..i).rev() {
                let (h11s, h21) = start_vector(h, mm);
                let h10 = h[(mm, mm - 1)].re;
                let h11 = h[(mm, mm)];
                let h22 = h[(mm + 1, mm + 1)];
                if h10.abs() * h21.abs() <= ulp * (cabs1(h11s) * (cabs1(h11) + cabs1(h22))) {
                    m = mm;
                    v0 = h11s;
                    v1 = h21;
                    break;
                }
            }
            let mut v1c = C64::new(v1, 0.0);

            // Single-shift QR sweep over the window l..=i.
            let op_start = deferred.ops.len();
            for k in m..i {
                if k > m {
                    v0 = h[(k, k - 1)];
                    v1c = h[(k + 1, k - 1)];
                }
                let (beta, v2, t1) = larfg2(v0, v1c);
                if k > m {
                    h[(k, k - 1)] = beta;
                    h[(k + 1, k - 1)] = ZERO;
                }
                let t2 = t1 * v2;
                let (t1c, t2c) = (t1.conj(), t2.conj());
                {
                    let nn = n;
                    let data = h.as_mut_slice();
                    let (upper, lower) = data.split_at_mut((k + 1) * nn);
                    let rk = &mut upper[k * nn + k..k * nn + i + 1];
                    let rk1 = &mut lower[k..i + 1];
                    for (a, b) in rk.iter_mut().zip(rk1.iter_mut()) {
                        let sum = t1c * *a + t2c * *b;
                        *a -= sum;
                        *b -= sum * v2;
                    }
                }
                let v2c = v2.conj();
                for r in l..=(k + 2).min(i) {
                    let row = h.row_mut(r);
                    let sum = t1 * row[k] + t2 * row[k + 1];
                    row[k] -= sum;
                    row[k + 1] -= sum * v2c;
                }
                if want_t {
                    deferred.ops.push(Op::Reflect { k, t1, t2, v2 });
                }

                if k == m && m > l {
                    // Keep H[m, m-1] real after the decoupled first step.
                    let temp = ONE - t1;
                    let temp = temp / temp.norm();
                    h[(m + 1, m)] *= temp.conj();
                    if m + 2 <= i {
                        h[(m + 2, m + 1)] *= temp;
                    }
                    for j in m..=i {
                        if j == m + 1 {
                            continue;
                        }
                        for x in &mut h.row_mut(j)[j + 1..=i] {
                            *x *= temp;
                        }
                        let tc = temp.conj();
                        for r in l..j {
                            h[(r, j)] *= tc;
                        }
                        if want_t {
                            deferred.ops.push(Op::Scale { j, d: tc });
                        }
                    }
                }
            }

            // Ensure H[i, i-1] is real.
            let temp = h[(i, i - 1)];
            if temp.im != 0.0 {
                let r = temp.norm();
                h[(i, i - 1)] = C64::new(r, 0.0);
                let temp = temp / r;
                for r in l..i {
                    h[(r, i)] *= temp;
                }
                if want_t {
                    deferred.ops.push(Op::Scale { j: i, d: temp });
                }
            }

            if want_t {
                deferred.close_segment(l, i, op_start);
                deferred.flush_if_full(h, zt.as_deref_mut());
            }
        }
        if !converged {
            return Err(Error::NoConvergence { iterations: itmax });
        }
        w[i] = h[(i, i)];
        kdefl = 0;
        if l == 0 {
            break;
        }
        i = l - 1;
    }
    deferred.flush(h, zt);
    Ok(w)
}

/// Full complex Schur decomposition `A = Z T Z†`.
pub fn complex_schur(a: &ComplexMatrix) -> Result<Schur> {
    a.ensure_finite()?;
    let n = a.dim();
    let mut t = a.clone();
    let mut z = ComplexMatrix::identity(n);
    hessenberg(&mut t, Some(&mut z));
    let mut zt = z.transpose();
    hessenberg_qr(&mut t, Some(&mut zt))?;
    let z = zt.transpose();
    // Entries below the diagonal are zero up to roundoff from deferred scaling.
    for r in 1..n {
        for x in &mut t.row_mut(r)[..r] {
            *x = ZERO;
        }
    }
    Ok(Schur { t, z })
}

/// Eigenvalues only, without forming the Schur vectors or the full
/// triangular factor.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<C64>> {
    a.ensure_finite()?;
    let mut h = a.clone();
    hessenberg(&mut h, None);
    hessenberg_qr(&mut h, None)
}
