//! Stroboscopic evolution of stepwise drives and the Floquet Hamiltonian.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_general, eigenvalues, mat_exp, mat_log_unitary_with, quasienergy_from_eigenvalue, ComplexMatrix, LogMethod,
    Tolerances, C64,
};

/// One piece of a stepwise drive: `H` applied for `duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub hamiltonian: ComplexMatrix,
    pub duration: f64,
}

/// Piecewise-constant drive over one period. Steps are applied in order, so
/// the last step ends up leftmost in `U_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingProtocol {
    pub steps: Vec<Step>,
    pub period: f64,
    /// Dimensionless drive strength `λ = tT/2`, when the model defines one.
    pub lambda: Option<f64>,
}

impl DrivingProtocol {
    pub fn new(steps: Vec<Step>, period: f64, lambda: Option<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidProtocol(format!("period must be positive, got {period}")));
        }
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidProtocol("protocol has no steps".into()))?;
        let dim = first.hamiltonian.dim();
        let mut total = 0.0;
        for (k, s) in steps.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(Error::InvalidProtocol(format!("step {k} has duration {}", s.duration)));
            }
            if s.hamiltonian.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.hamiltonian.dim() });
            }
            s.hamiltonian.ensure_finite()?;
            total += s.duration;
        }
        if (total - period).abs() > 1e-12 * period.max(1.0) {
            return Err(Error::InvalidProtocol(format!("durations sum to {total}, period is {period}")));
        }
        Ok(Self { steps, period, lambda })
    }

    /// Two steps of duration `T/2` each.
    pub fn two_step(h1: ComplexMatrix, h2: ComplexMatrix, period: f64, lambda: Option<f64>) -> Result<Self> {
        let d = period / 2.0;
        Self::new(
            vec![Step { hamiltonian: h1, duration: d }, Step { hamiltonian: h2, duration: d }],
            period,
            lambda,
        )
    }

    pub fn dim(&self) -> usize {
        self.steps[0].hamiltonian.dim()
    }
}

/// `U_F = Π_s exp(−i H_s Δτ_s)`, later steps to the left.
pub fn evolve_protocol(p: &DrivingProtocol) -> Result<ComplexMatrix> {
    let mut u: Option<ComplexMatrix> = None;
    for s in &p.steps {
        let e = mat_exp(&s.hamiltonian.scale(C64::new(0.0, -s.duration)))?;
        u = Some(match u {
            None => e,
            Some(prev) => e.matmul(&prev),
        });
    }
    Ok(u.expect("validated protocol has at least one step"))
}

/// Duration-weighted mean `(1/T) Σ_s H_s Δτ_s`.
pub fn averaged_hamiltonian(p: &DrivingProtocol) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(p.dim());
    for s in &p.steps {
        h += &s.hamiltonian.scale_real(s.duration / p.period);
    }
    h
}

/// Wraps a real quasienergy into `[−π/T, π/T)`.
pub fn fold(e: f64, period: f64) -> f64 {
    let w = 2.0 * PI / period;
    let x = e - w * ((e + PI / period) / w).floor();
    if x >= PI / period {
        x - w
    } else {
        x
    }
}

/// Ascending `Re E`, then ascending `Im E`.
pub fn quasienergy_order(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn sorted_permutation(e: &[C64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..e.len()).collect();
    idx.sort_by(|&a, &b| quasienergy_order(&e[a], &e[b]));
    idx
}

fn permute_columns(m: &ComplexMatrix, perm: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.dim(), |i, j| m[(i, perm[j])])
}

/// Sorted quasienergies from the eigenvalues of `u` alone.
pub fn quasienergies(u: &ComplexMatrix, period: f64) -> Result<Vec<C64>> {
    let tol = Tolerances::default();
    let mut e: Vec<C64> = eigenvalues(u)?
        .into_iter()
        .map(|xi| quasienergy_from_eigenvalue(xi, period, &tol).0)
        .collect();
    e.sort_by(quasienergy_order);
    Ok(e)
}

/// Eigenpairs of `U_F` in quasienergy order, without the generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetEigensystem {
    pub quasienergies: Vec<C64>,
    pub floquet_eigs: Vec<C64>,
    /// Unit-norm right eigenvectors as columns, in the same order.
    pub eigvecs: ComplexMatrix,
    pub residual_max: f64,
    pub branch_flags: Vec<bool>,
}

pub fn floquet_eigensystem(u: &ComplexMatrix, period: f64) -> Result<FloquetEigensystem> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    let tol = Tolerances::default();
    let eig = eig_general(u)?;
    let (e, flags): (Vec<C64>, Vec<bool>) = eig
        .eigenvalues
        .iter()
        .map(|&xi| quasienergy_from_eigenvalue(xi, period, &tol))
        .unzip();
    let perm = sorted_permutation(&e);
    Ok(FloquetEigensystem {
        quasienergies: perm.iter().map(|&i| e[i]).collect(),
        floquet_eigs: perm.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigvecs: permute_columns(&eig.vectors, &perm),
        residual_max: eig.max_residual(),
        branch_flags: perm.iter().map(|&i| flags[i]).collect(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloquetResult {
    pub u_f: ComplexMatrix,
    pub h_f: ComplexMatrix,
    pub quasienergies: Vec<C64>,
    pub floquet_eigs: Vec<C64>,
    pub eigvecs: ComplexMatrix,
    pub residual_max: f64,
    pub branch_flags: Vec<bool>,
    pub method: LogMethod,
    pub condition_estimate: f64,
}

/// `H_F = (i/T) log U_F` with the principal branch `Re E ∈ [−π/T, π/T)`.
pub fn extract_hf(u_f: &ComplexMatrix, period: f64) -> Result<FloquetResult> {
    extract_hf_with(u_f, period, &Tolerances::default())
}

pub fn extract_hf_with(u_f: &ComplexMatrix, period: f64, tol: &Tolerances) -> Result<FloquetResult> {
    let log = mat_log_unitary_with(u_f, period, tol)?;
    let perm = sorted_permutation(&log.quasienergies);
    Ok(FloquetResult {
        u_f: u_f.clone(),
        quasienergies: perm.iter().map(|&i| log.quasienergies[i]).collect(),
        floquet_eigs: perm.iter().map(|&i| log.eigenvalues[i]).collect(),
        eigvecs: permute_columns(&log.eig.vectors, &perm),
        residual_max: log.eig.max_residual(),
        branch_flags: perm.iter().map(|&i| log.branch_flags[i]).collect(),
        method: log.method,
        condition_estimate: log.eig.condition_estimate,
        h_f: log.generator,
    })
}

/// Folded analytic spectrum `(2λ/T) cos(2πn/N)` of the periodic minimal
/// model, sorted.
pub fn pbc_quasienergies_minimal(sites: usize, lambda: f64, period: f64) -> Result<Vec<C64>> {
    if sites < 2 {
        return Err(Error::InvalidLattice(format!("need at least 2 sites, got {sites}")));
    }
    let mut e: Vec<C64> = (0..sites)
        .map(|n| {
            let k = 2.0 * PI * n as f64 / sites as f64;
            C64::new(fold(2.0 * lambda / period * k.cos(), period), 0.0)
        })
        .collect();
    e.sort_by(quasienergy_order);
    Ok(e)
}

/// Distance between two quasienergy multisets: greedy nearest matching with
/// real parts compared modulo `2π/T`. Returns infinity for unequal lengths.
pub fn spectrum_distance(a: &[C64], b: &[C64], period: f64) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let w = 2.0 * PI / period;
    let dist = |x: &C64, y: &C64| {
        let dr = fold(x.re - y.re, period).abs().min(w);
        dr.hypot(x.im - y.im)
    };
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, dist(x, y)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lengths match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}
