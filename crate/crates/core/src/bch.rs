//! Low-order Baker–Campbell–Hausdorff terms of two-step drives and the
//! boundary/bulk structure of the correction `V = H_F − H₀`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::floquet::DrivingProtocol;
use crate::linalg::{spectral_norm, ComplexMatrix, C64};

fn two_steps(p: &DrivingProtocol) -> Result<(&ComplexMatrix, f64, &ComplexMatrix, f64)> {
    match p.steps.as_slice() {
        [a, b] => Ok((&a.hamiltonian, a.duration, &b.hamiltonian, b.duration)),
        s => Err(Error::InvalidProtocol(format!("expected a two-step protocol, got {} steps", s.len()))),
    }
}

/// Floquet Hamiltonian from the BCH series of `U_F = e^Y e^X` truncated at
/// `order` (1 to 3), with `X = −iH₁Δτ₁` and `Y = −iH₂Δτ₂`:
///
/// `log U_F ≈ X + Y + ½[Y, X] + (1/12)([Y, [Y, X]] + [X, [X, Y]])`,
///
/// returned as `(i/T) log U_F`. For the minimal model the second-order term
/// is `+(iλ²/2T)[L̂, R̂]`.
pub fn bch_truncated(p: &DrivingProtocol, order: u8) -> Result<ComplexMatrix> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("BCH order must be 1, 2 or 3, got {order}")));
    }
    let (h1, d1, h2, d2) = two_steps(p)?;
    let x = h1.scale(C64::new(0.0, -d1));
    let y = h2.scale(C64::new(0.0, -d2));
    let mut z = &x + &y;
    if order >= 2 {
        let yx = ComplexMatrix::commutator(&y, &x);
        z += &yx.scale_real(0.5);
        if order >= 3 {
            let xy = yx.scale_real(-1.0);
            let mut third = ComplexMatrix::commutator(&y, &yx);
            third += &ComplexMatrix::commutator(&x, &xy);
            z += &third.scale_real(1.0 / 12.0);
        }
    }
    Ok(z.scale(C64::new(0.0, 1.0 / p.period)))
}

/// Sufficient convergence condition `‖X‖₂ + ‖Y‖₂ < π` of the BCH series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBound {
    /// `‖X‖₂ + ‖Y‖₂` at the protocol's amplitudes.
    pub generator_norm: f64,
    /// Factor by which all step Hamiltonians may be scaled before the
    /// condition fails; infinite for a zero protocol.
    pub scale_star: f64,
    /// `λ·scale_star` when the protocol carries `λ`.
    pub lambda_star: Option<f64>,
}

pub fn convergence_bound(p: &DrivingProtocol) -> Result<ConvergenceBound> {
    let (h1, d1, h2, d2) = two_steps(p)?;
    let generator_norm = spectral_norm(h1)? * d1 + spectral_norm(h2)? * d2;
    let scale_star = if generator_norm > 0.0 { PI / generator_norm } else { f64::INFINITY };
    Ok(ConvergenceBound {
        generator_norm,
        scale_star,
        lambda_star: p.lambda.map(|l| l * scale_star),
    })
}

/// `V = H_F − H₀` split into entries near an edge and the bulk block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSplit {
    pub v: ComplexMatrix,
    pub v_boundary: ComplexMatrix,
    pub v_bulk: ComplexMatrix,
    /// Cells excluded at each edge.
    pub cutoff: usize,
    pub band_dim: usize,
    /// `(N − 2s)⁻² Σ_{i,j ∈ bulk} |V_ij|`.
    pub gamma_p: f64,
}

impl PerturbationSplit {
    pub fn sites(&self) -> usize {
        self.v.dim() / self.band_dim
    }
}

/// Default cutoff `⌈N/4⌉`.
pub fn default_cutoff(sites: usize) -> usize {
    sites.div_ceil(4)
}

/// Single-band split; see [`perturbation_split_cells`].
pub fn perturbation_split(h_f_obc: &ComplexMatrix, h0: &ComplexMatrix, cutoff: usize) -> Result<PerturbationSplit> {
    perturbation_split_cells(h_f_obc, h0, cutoff, 1)
}

/// Splits `V = h_f_obc − h0`. An entry is bulk when both of its cells lie in
/// `[s, N − s)` (0-based); everything else is boundary.
pub fn perturbation_split_cells(
    h_f_obc: &ComplexMatrix,
    h0: &ComplexMatrix,
    cutoff: usize,
    band_dim: usize,
) -> Result<PerturbationSplit> {
    h_f_obc.ensure_same_dim(h0)?;
    if band_dim == 0 || h0.dim() % band_dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "dimension {} is not a multiple of the band dimension {band_dim}",
            h0.dim()
        )));
    }
    let n = h0.dim() / band_dim;
    if 2 * cutoff >= n {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} leaves no bulk on {n} sites")));
    }
    let v = h_f_obc - h0;
    let dim = v.dim();
    let bulk = |i: usize| (cutoff..n - cutoff).contains(&(i / band_dim));
    let mut v_boundary = ComplexMatrix::zeros(dim);
    let mut v_bulk = ComplexMatrix::zeros(dim);
    let mut sum = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let z = v[(i, j)];
            if bulk(i) && bulk(j) {
                v_bulk[(i, j)] = z;
                sum += z.norm();
            } else {
                v_boundary[(i, j)] = z;
            }
        }
    }
    let width = (n - 2 * cutoff) as f64;
    Ok(PerturbationSplit {
        v,
        v_boundary,
        v_bulk,
        cutoff,
        band_dim,
        gamma_p: sum / (width * width),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagonal {
    /// `|V_{j,j}|`.
    Main,
    /// `|V_{j,j+1}|`.
    Secondary,
}

/// `(site, magnitude)` along a diagonal of `V`, sites numbered from 1. For
/// multi-band splits the magnitude is the Frobenius norm of the cell block.
pub fn boundary_decay_profile(split: &PerturbationSplit, which: Diagonal) -> Vec<(usize, f64)> {
    let m = split.band_dim;
    let n = split.sites();
    let offset = match which {
        Diagonal::Main => 0,
        Diagonal::Secondary => 1,
    };
    (0..n - offset)
        .map(|c| {
            let mut s = 0.0;
            for a in 0..m {
                for b in 0..m {
                    s += split.v[(c * m + a, (c + offset) * m + b)].norm_sqr();
                }
            }
            (c + 1, s.sqrt())
        })
        .collect()
}

/// Exponential edge decay `|V| ≈ A e^{−j/ξ}` fitted on sites `2..=s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate `1/ξ` per site.
    pub rate: f64,
    pub length: f64,
    pub fit: LinearFit,
}

/// Least squares on `ln|V|` over sites `[2, s]`; zero entries are skipped.
pub fn fit_decay(profile: &[(usize, f64)], cutoff: usize) -> Result<DecayFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .filter(|(j, v)| (2..=cutoff).contains(j) && *v > 0.0)
        .map(|(j, v)| (*j as f64, v.ln()))
        .unzip();
    let fit = linear_fit(&x, &y)?;
    let rate = -fit.slope;
    Ok(DecayFit { rate, length: 1.0 / rate, fit })
}
