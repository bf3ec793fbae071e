//! Lattice operators and the driving Hamiltonians built from them.
//!
//! Operators act on `C^N ⊗ C^m` with site-major ordering: basis index
//! `site * m + band`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::DrivingProtocol;
use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `L̂|j+1⟩ = |j⟩`; acts as `e^{ik}` on plane waves.
    Left,
    /// `R̂ = L̂ᵀ`.
    Right,
}

/// Chain geometry. `eta` scales the wrap-around hopping: 1 is periodic,
/// 0 is open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub eta: f64,
    pub band_dim: usize,
}

impl LatticeSpec {
    pub fn new(sites: usize, eta: f64, band_dim: usize) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites, got {sites}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidLattice(format!("eta must lie in [0, 1], got {eta}")));
        }
        if band_dim == 0 {
            return Err(Error::InvalidLattice("band dimension must be positive".into()));
        }
        Ok(Self { sites, eta, band_dim })
    }

    pub fn open(sites: usize, band_dim: usize) -> Result<Self> {
        Self::new(sites, 0.0, band_dim)
    }

    pub fn periodic(sites: usize, band_dim: usize) -> Result<Self> {
        Self::new(sites, 1.0, band_dim)
    }

    /// Hilbert-space dimension `N·m`.
    pub fn dim(&self) -> usize {
        self.sites * self.band_dim
    }

    pub fn is_open(&self) -> bool {
        self.eta == 0.0
    }
}

/// `L̂^r` or `R̂^r` on `spec.sites` sites. Entries that wrap around the chain
/// carry a factor `η`.
pub fn build_shift(spec: &LatticeSpec, direction: Direction, r: usize) -> Result<ComplexMatrix> {
    let n = spec.sites;
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!("shift power must satisfy 0 < r < N = {n}, got {r}")));
    }
    let eta = C64::new(spec.eta, 0.0);
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        let (j, w) = if i + r < n { (i + r, ONE) } else { (i + r - n, eta) };
        if w != ZERO {
            match direction {
                Direction::Left => m[(i, j)] = w,
                Direction::Right => m[(j, i)] = w,
            }
        }
    }
    Ok(m)
}

/// Pauli matrices and the 2×2 identity.
pub mod pauli {
    use crate::linalg::{ComplexMatrix, C64, I, ONE, ZERO};

    pub fn sigma0() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap()
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]).unwrap()
    }

    pub(crate) fn combo(a: C64, m: &ComplexMatrix, b: C64, k: &ComplexMatrix) -> ComplexMatrix {
        &m.scale(a) + &k.scale(b)
    }
}

/// Two-step multi-band ansatz
/// `H_i = 1⊗A_i + Σ_r [L̂^r⊗X_i^(r) + R̂^r⊗Y_i^(r)]`.
/// Index `r − 1` of each hopping vector holds the distance-`r` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBandSpec {
    pub range: usize,
    pub a1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub x1: Vec<ComplexMatrix>,
    pub x2: Vec<ComplexMatrix>,
    pub y1: Vec<ComplexMatrix>,
    pub y2: Vec<ComplexMatrix>,
}

impl MultiBandSpec {
    /// Ansatz with all blocks zero.
    pub fn zeros(band_dim: usize, range: usize) -> Self {
        let z = ComplexMatrix::zeros(band_dim);
        let v = vec![z.clone(); range];
        Self {
            range,
            a1: z.clone(),
            a2: z,
            x1: v.clone(),
            x2: v.clone(),
            y1: v.clone(),
            y2: v,
        }
    }

    pub fn band_dim(&self) -> usize {
        self.a1.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.band_dim();
        if m == 0 {
            return Err(Error::InvalidArgument("ansatz band dimension must be positive".into()));
        }
        if self.range == 0 {
            return Err(Error::InvalidArgument("ansatz range must be positive".into()));
        }
        for (name, v) in [("x1", &self.x1), ("x2", &self.x2), ("y1", &self.y1), ("y2", &self.y2)] {
            if v.len() != self.range {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {} blocks but the range is {}",
                    v.len(),
                    self.range
                )));
            }
        }
        for b in self.blocks() {
            if b.dim() != m {
                return Err(Error::DimensionMismatch { expected: m, found: b.dim() });
            }
            b.ensure_finite()?;
        }
        Ok(())
    }

    fn blocks(&self) -> impl Iterator<Item = &ComplexMatrix> {
        [&self.a1, &self.a2]
            .into_iter()
            .chain(self.x1.iter())
            .chain(&self.x2)
            .chain(&self.y1)
            .chain(&self.y2)
    }

    /// Largest Frobenius norm among the hopping blocks.
    pub fn max_hopping_norm(&self) -> f64 {
        self.x1
            .iter()
            .chain(&self.x2)
            .chain(&self.y1)
            .chain(&self.y2)
            .map(ComplexMatrix::norm_fro)
            .fold(0.0, f64::max)
    }

    /// Intracell block and (X, Y) hoppings of step `which` (1 or 2).
    pub fn step(&self, which: u8) -> (&ComplexMatrix, &[ComplexMatrix], &[ComplexMatrix]) {
        match which {
            1 => (&self.a1, &self.x1, &self.y1),
            2 => (&self.a2, &self.x2, &self.y2),
            _ => panic!("step index must be 1 or 2, got {which}"),
        }
    }

    /// Real-space step Hamiltonian `H_which`.
    pub fn step_hamiltonian(&self, spec: &LatticeSpec, which: u8) -> Result<ComplexMatrix> {
        self.validate()?;
        let m = self.band_dim();
        if spec.band_dim != m {
            return Err(Error::DimensionMismatch { expected: spec.band_dim, found: m });
        }
        if spec.sites <= 2 * self.range {
            return Err(Error::InvalidLattice(format!(
                "range {} needs more than {} sites, got {}",
                self.range,
                2 * self.range,
                spec.sites
            )));
        }
        let (a, x, y) = self.step(which);
        let mut h = ComplexMatrix::identity(spec.sites).kron(a);
        for r in 1..=self.range {
            if !x[r - 1].is_zero() {
                h += &build_shift(spec, Direction::Left, r)?.kron(&x[r - 1]);
            }
            if !y[r - 1].is_zero() {
                h += &build_shift(spec, Direction::Right, r)?.kron(&y[r - 1]);
            }
        }
        Ok(h)
    }
}

/// `ĥ_i(k) = A_i + Σ_r [e^{ikr}X_i^(r) + e^{−ikr}Y_i^(r)]`.
pub fn bloch_hamiltonian(ansatz: &MultiBandSpec, which: u8, k: f64) -> ComplexMatrix {
    let (a, x, y) = ansatz.step(which);
    let mut h = a.clone();
    for r in 1..=ansatz.range {
        let phase = C64::from_polar(1.0, k * r as f64);
        h += &x[r - 1].scale(phase);
        h += &y[r - 1].scale(phase.conj());
    }
    h
}

/// Two equal-duration steps from an ansatz.
pub fn build_general(spec: &LatticeSpec, ansatz: &MultiBandSpec, period: f64) -> Result<DrivingProtocol> {
    let h1 = ansatz.step_hamiltonian(spec, 1)?;
    let h2 = ansatz.step_hamiltonian(spec, 2)?;
    DrivingProtocol::two_step(h1, h2, period, None)
}

/// Scalar ansatz of the minimal model: `H₁ = tL̂`, `H₂ = tR̂`.
pub fn minimal_ansatz(t: f64) -> MultiBandSpec {
    let mut a = MultiBandSpec::zeros(1, 1);
    let s = ComplexMatrix::from_diagonal(&[C64::new(t, 0.0)]);
    a.x1[0] = s.clone();
    a.y2[0] = s;
    a
}

/// Minimal model; reports `λ = tT/2`.
pub fn build_minimal(spec: &LatticeSpec, t: f64, period: f64) -> Result<DrivingProtocol> {
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    if spec.band_dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: spec.band_dim });
    }
    let tc = C64::new(t, 0.0);
    let h1 = build_shift(spec, Direction::Left, 1)?.scale(tc);
    let h2 = build_shift(spec, Direction::Right, 1)?.scale(tc);
    DrivingProtocol::two_step(h1, h2, period, Some(t * period / 2.0))
}

/// `M = tσ_x + σ_z`, `A₁ = A₂ = (3/2)M`, `X₁ = Y₂ = M`.
pub fn type1_ansatz(t: f64) -> MultiBandSpec {
    let m = pauli::combo(C64::new(t, 0.0), &pauli::sigma_x(), ONE, &pauli::sigma_z());
    let mut a = MultiBandSpec::zeros(2, 1);
    a.a1 = m.scale_real(1.5);
    a.a2 = m.scale_real(1.5);
    a.x1[0] = m.clone();
    a.y2[0] = m;
    a
}

pub fn build_type1(spec: &LatticeSpec, t: f64, period: f64) -> Result<DrivingProtocol> {
    require_two_bands(spec)?;
    build_general(spec, &type1_ansatz(t), period)
}

/// `H_{1(2)} = t₁(L̂+R̂)⊗[σ₀+(1±i)σ_x] + t₂(L̂²+R̂²)⊗[σ₀+(1±i)σ_z]`.
pub fn type2_ansatz(t1: f64, t2: f64) -> MultiBandSpec {
    let mut a = MultiBandSpec::zeros(2, 2);
    for (which, sign) in [(1u8, 1.0), (2u8, -1.0)] {
        let c = ONE + I * sign;
        let near = pauli::combo(ONE, &pauli::sigma0(), c, &pauli::sigma_x()).scale_real(t1);
        let far = pauli::combo(ONE, &pauli::sigma0(), c, &pauli::sigma_z()).scale_real(t2);
        let (x, y) = if which == 1 { (&mut a.x1, &mut a.y1) } else { (&mut a.x2, &mut a.y2) };
        x[0] = near.clone();
        y[0] = near;
        x[1] = far.clone();
        y[1] = far;
    }
    a
}

pub fn build_type2(spec: &LatticeSpec, t1: f64, t2: f64, period: f64) -> Result<DrivingProtocol> {
    require_two_bands(spec)?;
    build_general(spec, &type2_ansatz(t1, t2), period)
}

fn require_two_bands(spec: &LatticeSpec) -> Result<()> {
    if spec.band_dim != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: spec.band_dim });
    }
    Ok(())
}

/// Site reflection `|j⟩ → |N−1−j⟩` tensored with the band identity.
pub fn reflection(sites: usize, band_dim: usize) -> ComplexMatrix {
    let j = ComplexMatrix::from_fn(sites, |a, b| if a + b + 1 == sites { ONE } else { ZERO });
    j.kron(&ComplexMatrix::identity(band_dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, eta: f64) -> LatticeSpec {
        LatticeSpec::new(n, eta, 1).unwrap()
    }

    #[test]
    fn open_left_shift_on_three_sites() {
        let l = build_shift(&spec(3, 0.0), Direction::Left, 1).unwrap();
        let expect = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0; 3]]).unwrap();
        assert_eq!(l, expect);
    }

    #[test]
    fn periodic_shift_adds_corner() {
        let l = build_shift(&spec(3, 1.0), Direction::Left, 1).unwrap();
        assert_eq!(l[(2, 0)], ONE);
        assert_eq!(l[(0, 1)], ONE);
        assert_eq!(l.as_slice().iter().filter(|z| **z != ZERO).count(), 3);
    }

    #[test]
    fn shift_power_matches_matrix_power() {
        for eta in [0.0, 0.4, 1.0] {
            let s = spec(7, eta);
            let l = build_shift(&s, Direction::Left, 1).unwrap();
            let mut p = l.clone();
            for r in 2..7 {
                p = p.matmul(&l);
                assert!(build_shift(&s, Direction::Left, r).unwrap().max_abs_diff(&p) < 1e-15);
            }
        }
    }

    #[test]
    fn shift_power_out_of_range() {
        assert!(build_shift(&spec(4, 0.0), Direction::Left, 4).is_err());
        assert!(build_shift(&spec(4, 0.0), Direction::Right, 0).is_err());
    }

    #[test]
    fn lattice_validation() {
        assert!(LatticeSpec::new(1, 0.0, 1).is_err());
        assert!(LatticeSpec::new(4, 1.5, 1).is_err());
        assert!(LatticeSpec::new(4, f64::NAN, 1).is_err());
        assert!(LatticeSpec::new(4, 0.5, 0).is_err());
    }

    #[test]
    fn minimal_reports_lambda() {
        let p = build_minimal(&spec(2, 0.0), 2.0, 1.0).unwrap();
        assert_eq!(p.lambda, Some(1.0));
        assert_eq!(p.steps.len(), 2);
        assert_eq!(p.steps[0].duration, 0.5);
        let l = build_shift(&spec(2, 0.0), Direction::Left, 1).unwrap();
        assert_eq!(p.steps[0].hamiltonian, l.scale_real(2.0));
        assert_eq!(p.steps[1].hamiltonian, l.transpose().scale_real(2.0));
    }

    #[test]
    fn general_builder_reproduces_minimal() {
        for eta in [0.0, 1.0] {
            let s = spec(9, eta);
            let a = build_general(&s, &minimal_ansatz(1.3), 1.0).unwrap();
            let b = build_minimal(&s, 1.3, 1.0).unwrap();
            for (x, y) in a.steps.iter().zip(&b.steps) {
                assert_eq!(x.hamiltonian, y.hamiltonian);
            }
        }
    }

    #[test]
    fn banded_structure_for_range_two() {
        let s = LatticeSpec::open(6, 2).unwrap();
        let mut a = MultiBandSpec::zeros(2, 2);
        let blk = |k: usize| ComplexMatrix::from_fn(2, |i, j| C64::new((i + 2 * j + k) as f64 * 0.3 - 0.7, (k as f64) * 0.1));
        a.a1 = blk(0);
        a.a2 = blk(1);
        for r in 0..2 {
            a.x1[r] = blk(2 + r);
            a.x2[r] = blk(4 + r);
            a.y1[r] = blk(6 + r);
            a.y2[r] = blk(8 + r);
        }
        let h = a.step_hamiltonian(&s, 1).unwrap();
        for i in 0..12usize {
            for j in 0..12 {
                if (i / 2).abs_diff(j / 2) > 2 {
                    assert_eq!(h[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn type_builders_require_two_bands() {
        let s = spec(6, 0.0);
        assert!(build_type1(&s, 1.0, 1.0).is_err());
        assert!(build_type2(&s, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn overlapping_boundaries_rejected() {
        let s = LatticeSpec::open(4, 2).unwrap();
        assert!(build_type2(&s, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn bloch_minimal_sum_is_cosine() {
        let a = minimal_ansatz(1.7);
        for k in [-3.0, -1.0, 0.0, 0.4, 2.2] {
            let s = &bloch_hamiltonian(&a, 1, k) + &bloch_hamiltonian(&a, 2, k);
            assert!((s[(0, 0)] - C64::new(2.0 * 1.7 * f64::cos(k), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn bloch_type2_at_zero_momentum() {
        let (t1, t2) = (0.8, 0.3);
        let a = type2_ansatz(t1, t2);
        let s = &bloch_hamiltonian(&a, 1, 0.0) + &bloch_hamiltonian(&a, 2, 0.0);
        let expect = &(&pauli::sigma0() + &pauli::sigma_x()).scale_real(4.0 * t1)
            + &(&pauli::sigma0() + &pauli::sigma_z()).scale_real(4.0 * t2);
        assert!(s.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn bloch_matches_fourier_block() {
        let n = 8;
        let m = 2;
        let s = LatticeSpec::periodic(n, m).unwrap();
        for a in [type1_ansatz(0.7), type2_ansatz(0.9, 0.4)] {
            let h = a.step_hamiltonian(&s, 1).unwrap();
            for q in 0..n {
                let k = 2.0 * std::f64::consts::PI * q as f64 / n as f64;
                // Block ⟨k|H|k⟩ with |k⟩ = N^{-1/2} Σ_j e^{ikj}|j⟩.
                let mut blk = ComplexMatrix::zeros(m);
                for i in 0..n {
                    for j in 0..n {
                        let ph = C64::from_polar(1.0 / n as f64, k * (j as f64 - i as f64));
                        for b in 0..m {
                            for c in 0..m {
                                blk[(b, c)] += ph * h[(i * m + b, j * m + c)];
                            }
                        }
                    }
                }
                let k0 = if k >= std::f64::consts::PI { k - 2.0 * std::f64::consts::PI } else { k };
                assert!(blk.max_abs_diff(&bloch_hamiltonian(&a, 1, k0)) < 1e-12);
            }
        }
    }

    #[test]
    fn reflection_is_involution() {
        let p = reflection(5, 2);
        assert_eq!(p.matmul(&p), ComplexMatrix::identity(10));
    }
}
