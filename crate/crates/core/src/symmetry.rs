//! Audits of the PT construction: protocol-level and Floquet-level PT
//! symmetry, Bloch-space conditions, the hopping inequalities and the
//! bulk/boundary split of the open-chain commutator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{evolve_protocol, DrivingProtocol};
use crate::lattice::{bloch_hamiltonian, build_general, build_shift, reflection, Direction, LatticeSpec, MultiBandSpec};
use crate::linalg::{ComplexMatrix, Lu, Tolerances};

/// Parity operator `P`; time reversal is complex conjugation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTOperators {
    pub parity: ComplexMatrix,
}

impl PTOperators {
    /// Checks that `P` is real and squares to the identity.
    pub fn new(parity: ComplexMatrix) -> Result<Self> {
        parity.ensure_finite()?;
        if parity.as_slice().iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidArgument("parity operator must be real".into()));
        }
        let n = parity.dim();
        if parity.matmul(&parity).max_abs_diff(&ComplexMatrix::identity(n)) > 1e-14 {
            return Err(Error::InvalidArgument("parity operator must square to the identity".into()));
        }
        Ok(Self { parity })
    }

    pub fn identity(dim: usize) -> Self {
        Self { parity: ComplexMatrix::identity(dim) }
    }

    /// Site reflection acting trivially on the bands.
    pub fn reflection(sites: usize, band_dim: usize) -> Self {
        Self { parity: reflection(sites, band_dim) }
    }

    pub fn dim(&self) -> usize {
        self.parity.dim()
    }

    /// `P conj(M) P`.
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.parity.matmul(&m.conj()).matmul(&self.parity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub passed: bool,
    pub defect: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn at_most(defect: f64, tolerance: f64) -> Self {
        Self { passed: defect <= tolerance, defect, tolerance }
    }

    fn above(value: f64, threshold: f64) -> Self {
        Self { passed: value > threshold, defect: value, tolerance: threshold }
    }
}

/// `‖P conj(H_s) P − H_{n+1−s}‖_F` over mirrored step pairs, which for two
/// steps is `‖P conj(H₁) P − H₂‖_F`. Mirrored steps must also have equal
/// durations.
pub fn check_pt_protocol(p: &DrivingProtocol, pt: &PTOperators) -> Result<CheckResult> {
    if pt.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: pt.dim() });
    }
    let n = p.steps.len();
    let mut sq = 0.0;
    for s in 0..n.div_ceil(2) {
        let (a, b) = (&p.steps[s], &p.steps[n - 1 - s]);
        if (a.duration - b.duration).abs() > 1e-12 * p.period {
            return Err(Error::InvalidProtocol(format!(
                "steps {s} and {} have different durations",
                n - 1 - s
            )));
        }
        sq += pt.apply(&a.hamiltonian).distance(&b.hamiltonian).powi(2);
    }
    Ok(CheckResult::at_most(sq.sqrt(), Tolerances::default().pt_protocol))
}

/// `‖P conj(U) P U − I‖_F`.
pub fn check_pt_of_floquet(u_f: &ComplexMatrix, pt: &PTOperators) -> Result<CheckResult> {
    if pt.dim() != u_f.dim() {
        return Err(Error::DimensionMismatch { expected: u_f.dim(), found: pt.dim() });
    }
    Lu::new(u_f)?;
    let defect = pt.apply(u_f).matmul(u_f).distance(&ComplexMatrix::identity(u_f.dim()));
    Ok(CheckResult::at_most(defect, Tolerances::default().pt_floquet))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochCheck {
    /// Largest `‖(h₁+h₂) − (h₁+h₂)†‖_F` on the grid.
    pub hermitian: CheckResult,
    /// Largest `‖[h₁(k), h₂(k)]‖_F` on the grid.
    pub commute: CheckResult,
    pub k_samples: usize,
}

/// Smallest grid on which the Bloch checks are exact. The commutator is a
/// trigonometric polynomial of degree `2w`, so `4w + 1` samples determine it.
pub fn exact_bloch_grid(range: usize) -> usize {
    4 * range + 1
}

/// Evaluates the Bloch conditions on `k_j = −π + 2πj/K`.
pub fn check_bloch_conditions(ansatz: &MultiBandSpec, k_samples: usize) -> Result<BlochCheck> {
    ansatz.validate()?;
    if k_samples < 2 * ansatz.range + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} k samples, got {k_samples}",
            2 * ansatz.range + 1
        )));
    }
    let tol = Tolerances::default().bloch;
    let (mut herm, mut comm) = (0.0_f64, 0.0_f64);
    for j in 0..k_samples {
        let k = -PI + 2.0 * PI * j as f64 / k_samples as f64;
        let h1 = bloch_hamiltonian(ansatz, 1, k);
        let h2 = bloch_hamiltonian(ansatz, 2, k);
        herm = herm.max((&h1 + &h2).hermiticity_defect());
        comm = comm.max(ComplexMatrix::commutator(&h1, &h2).norm_fro());
    }
    Ok(BlochCheck {
        hermitian: CheckResult::at_most(herm, tol),
        commute: CheckResult::at_most(comm, tol),
        k_samples,
    })
}

/// Norms of the three hopping families for one `(r, r′)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoppingEntry {
    pub r: usize,
    pub r_prime: usize,
    /// `‖[X₁^(r), Y₂^(r′)]‖_F`.
    pub x1_y2: f64,
    /// `‖[Y₁^(r), X₂^(r′)]‖_F`.
    pub y1_x2: f64,
    /// `‖Y₂^(r′) X₁^(r) − X₂^(r′) Y₁^(r)‖_F`.
    pub product: f64,
    pub flags: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingFlags {
    pub entries: Vec<HoppingEntry>,
    pub threshold: f64,
    /// True when any family is nonzero for any pair.
    pub passed: bool,
}

/// Hopping inequalities that allow a non-vanishing boundary commutator.
/// "Nonzero" means above `1e−12` times the largest hopping norm.
pub fn check_hopping_inequalities(ansatz: &MultiBandSpec) -> Result<HoppingFlags> {
    ansatz.validate()?;
    let threshold = Tolerances::default().hopping_zero * ansatz.max_hopping_norm();
    let mut entries = Vec::with_capacity(ansatz.range * ansatz.range);
    for r in 1..=ansatz.range {
        for rp in 1..=ansatz.range {
            let (x1, y1) = (&ansatz.x1[r - 1], &ansatz.y1[r - 1]);
            let (x2, y2) = (&ansatz.x2[rp - 1], &ansatz.y2[rp - 1]);
            let x1_y2 = ComplexMatrix::commutator(x1, y2).norm_fro();
            let y1_x2 = ComplexMatrix::commutator(y1, x2).norm_fro();
            let product = y2.matmul(x1).distance(&x2.matmul(y1));
            let flags = [x1_y2 > threshold, y1_x2 > threshold, product > threshold];
            entries.push(HoppingEntry { r, r_prime: rp, x1_y2, y1_x2, product, flags });
        }
    }
    let passed = entries.iter().any(|e| e.flags.iter().any(|f| *f));
    Ok(HoppingFlags { entries, threshold, passed })
}

/// Translation by `d` cells on the open chain: `L̂^d` for `d > 0`,
/// `R̂^{−d}` for `d < 0`, identity for 0; zero once `|d| ≥ N`.
fn open_translation(spec: &LatticeSpec, d: isize) -> Result<ComplexMatrix> {
    let n = spec.sites;
    let r = d.unsigned_abs();
    if r >= n {
        return Ok(ComplexMatrix::zeros(n));
    }
    match d.signum() {
        0 => Ok(ComplexMatrix::identity(n)),
        1 => build_shift(spec, Direction::Left, r),
        _ => build_shift(spec, Direction::Right, r),
    }
}

/// Lattice part of a hopping term, with its net displacement (`+r` for
/// `L̂^r`, `−r` for `R̂^r`).
struct Term<'a> {
    shift: isize,
    block: &'a ComplexMatrix,
}

fn terms(ansatz: &MultiBandSpec, which: u8) -> Vec<Term<'_>> {
    let (a, x, y) = ansatz.step(which);
    let mut out = vec![Term { shift: 0, block: a }];
    for r in 1..=ansatz.range {
        out.push(Term { shift: r as isize, block: &x[r - 1] });
        out.push(Term { shift: -(r as isize), block: &y[r - 1] });
    }
    out
}

/// Splits the open-chain commutator `[H₁, H₂] = G₁ + G₂`.
///
/// `G₁` replaces every product of lattice operators by the open-chain
/// translation with the same net displacement, giving
/// `G₁ = Σ_d T_d ⊗ C_d` where `C_d` is the `e^{ikd}` Fourier coefficient of
/// `[h₁(k), h₂(k)]`; it vanishes exactly when the Bloch Hamiltonians commute.
/// `G₂` collects the corrections `L̂ⁿR̂ᵐ − T_{n−m}` and `R̂ᵐL̂ⁿ − T_{n−m}` from
/// mixed left/right products, which live within `2w` cells of an edge.
pub fn commutator_decompose(ansatz: &MultiBandSpec, spec: &LatticeSpec) -> Result<(ComplexMatrix, ComplexMatrix)> {
    ansatz.validate()?;
    if !spec.is_open() {
        return Err(Error::InvalidLattice("commutator decomposition needs open boundaries".into()));
    }
    let w = ansatz.range;
    if spec.sites <= 2 * w {
        return Err(Error::InvalidLattice(format!(
            "boundaries overlap: range {w} needs more than {} sites, got {}",
            2 * w,
            spec.sites
        )));
    }
    let m = ansatz.band_dim();
    if spec.band_dim != m {
        return Err(Error::DimensionMismatch { expected: spec.band_dim, found: m });
    }
    let t1 = terms(ansatz, 1);
    let t2 = terms(ansatz, 2);
    let wi = w as isize;

    // Bulk: Fourier coefficients of the Bloch commutator.
    let mut coeff = vec![ComplexMatrix::zeros(m); 4 * w + 1];
    for a in &t1 {
        for b in &t2 {
            coeff[(a.shift + b.shift + 2 * wi) as usize] += &ComplexMatrix::commutator(a.block, b.block);
        }
    }
    let dim = spec.dim();
    let mut g1 = ComplexMatrix::zeros(dim);
    for (idx, c) in coeff.iter().enumerate() {
        if !c.is_zero() {
            g1 += &open_translation(spec, idx as isize - 2 * wi)?.kron(c);
        }
    }

    // Boundary: mixed products differ from the translation of their net shift.
    let lattice = |d: isize| -> Result<ComplexMatrix> { open_translation(spec, d) };
    let mut g2 = ComplexMatrix::zeros(dim);
    for a in &t1 {
        for b in &t2 {
            if a.shift * b.shift >= 0 {
                continue;
            }
            let (pa, pb) = (lattice(a.shift)?, lattice(b.shift)?);
            let net = lattice(a.shift + b.shift)?;
            let ab = &pa.matmul(&pb) - &net;
            let ba = &pb.matmul(&pa) - &net;
            g2 += &ab.kron(&a.block.matmul(b.block));
            g2 -= &ba.kron(&b.block.matmul(a.block));
        }
    }
    Ok((g1, g2))
}

/// Summary of the construction conditions for an ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub sites: usize,
    /// Protocol-level PT condition on the open chain.
    pub cond_pt: CheckResult,
    /// PT condition of the composed open-chain Floquet operator.
    pub cond_pt_floquet: CheckResult,
    pub cond_pbc_hermitian: CheckResult,
    pub cond_pbc_commute: CheckResult,
    /// Passes when `‖[H₁, H₂]_OBC‖_F` exceeds the zero threshold.
    pub cond_obc_noncommute: CheckResult,
    pub hopping: HoppingFlags,
    pub g1_norm: f64,
    /// Boundary part of the commutator; this, not the inequality flags,
    /// decides whether open boundaries break the commutation.
    pub g2_norm: f64,
}

impl AuditReport {
    pub fn all_passed(&self) -> bool {
        self.cond_pt.passed
            && self.cond_pt_floquet.passed
            && self.cond_pbc_hermitian.passed
            && self.cond_pbc_commute.passed
            && self.cond_obc_noncommute.passed
    }
}

/// Runs every check on the open chain of `sites` cells.
pub fn audit(ansatz: &MultiBandSpec, sites: usize, period: f64, pt: &PTOperators) -> Result<AuditReport> {
    let spec = LatticeSpec::open(sites, ansatz.band_dim())?;
    let p = build_general(&spec, ansatz, period)?;
    let cond_pt = check_pt_protocol(&p, pt)?;
    let cond_pt_floquet = check_pt_of_floquet(&evolve_protocol(&p)?, pt)?;
    let bloch = check_bloch_conditions(ansatz, exact_bloch_grid(ansatz.range))?;
    let comm = ComplexMatrix::commutator(&p.steps[0].hamiltonian, &p.steps[1].hamiltonian).norm_fro();
    let scale = ansatz.max_hopping_norm();
    let cond_obc_noncommute = CheckResult::above(comm, Tolerances::default().hopping_zero * scale * scale);
    let (g1, g2) = commutator_decompose(ansatz, &spec)?;
    Ok(AuditReport {
        sites,
        cond_pt,
        cond_pt_floquet,
        cond_pbc_hermitian: bloch.hermitian,
        cond_pbc_commute: bloch.commute,
        cond_obc_noncommute,
        hopping: check_hopping_inequalities(ansatz)?,
        g1_norm: g1.norm_fro(),
        g2_norm: g2.norm_fro(),
    })
}
