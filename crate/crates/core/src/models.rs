//! Named model presets with a single scanned parameter.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{evolve_protocol, DrivingProtocol};
use crate::lattice::{build_general, build_minimal, minimal_ansatz, type1_ansatz, type2_ansatz, LatticeSpec, MultiBandSpec};
use crate::linalg::ComplexMatrix;
use crate::symmetry::PTOperators;

/// Next-nearest-neighbour amplitude used for the second two-band model when
/// none is given. With `t₂ = 0.5` the total bandwidth is below `2π` at
/// `t₁ = 0`, so the onset in `t₁` is well defined.
pub const DEFAULT_TYPE2_T2: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityChoice {
    Reflection,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `H₁ = tL̂`, `H₂ = tR̂`; parameter `λ = tT/2`.
    Minimal,
    /// Commuting two-band model; parameter `t`.
    Type1,
    /// Non-commuting two-band model; parameter `t₁` at fixed `t₂`.
    Type2 { t2: f64 },
    /// User ansatz; parameter is an overall scale of every block.
    General { ansatz: MultiBandSpec, parity: ParityChoice },
}

/// A model family on a fixed lattice, evaluated at a scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub sites: usize,
    pub eta: f64,
    pub period: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, sites: usize, eta: f64, period: f64) -> Result<Self> {
        let m = Self { kind, sites, eta, period };
        m.validate()?;
        Ok(m)
    }

    pub fn minimal(sites: usize, eta: f64) -> Self {
        Self { kind: ModelKind::Minimal, sites, eta, period: 1.0 }
    }

    pub fn type1(sites: usize, eta: f64) -> Self {
        Self { kind: ModelKind::Type1, sites, eta, period: 1.0 }
    }

    pub fn type2(sites: usize, eta: f64, t2: f64) -> Self {
        Self { kind: ModelKind::Type2 { t2 }, sites, eta, period: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        LatticeSpec::new(self.sites, self.eta, self.band_dim())?;
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidProtocol(format!("period must be positive, got {}", self.period)));
        }
        match &self.kind {
            ModelKind::Type2 { t2 } if !t2.is_finite() => Err(Error::NonFinite),
            ModelKind::General { ansatz, .. } => ansatz.validate(),
            _ => Ok(()),
        }?;
        if self.sites <= 2 * self.ansatz(1.0).range {
            return Err(Error::InvalidLattice(format!(
                "{} sites is too short for hopping range {}",
                self.sites,
                self.ansatz(1.0).range
            )));
        }
        Ok(())
    }

    pub fn with_sites(&self, sites: usize) -> Self {
        Self { sites, ..self.clone() }
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..self.clone() }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Minimal => "minimal",
            ModelKind::Type1 => "type1",
            ModelKind::Type2 { .. } => "type2",
            ModelKind::General { .. } => "general",
        }
    }

    /// Name of the scanned parameter.
    pub fn parameter_name(&self) -> &'static str {
        match self.kind {
            ModelKind::Minimal => "lambda",
            ModelKind::Type1 => "t",
            ModelKind::Type2 { .. } => "t1",
            ModelKind::General { .. } => "scale",
        }
    }

    pub fn band_dim(&self) -> usize {
        match &self.kind {
            ModelKind::Minimal => 1,
            ModelKind::Type1 | ModelKind::Type2 { .. } => 2,
            ModelKind::General { ansatz, .. } => ansatz.band_dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sites * self.band_dim()
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.sites, self.eta, self.band_dim())
    }

    /// Ansatz blocks at parameter `x`.
    pub fn ansatz(&self, x: f64) -> MultiBandSpec {
        match &self.kind {
            ModelKind::Minimal => minimal_ansatz(2.0 * x / self.period),
            ModelKind::Type1 => type1_ansatz(x),
            ModelKind::Type2 { t2 } => type2_ansatz(x, *t2),
            ModelKind::General { ansatz, .. } => scale_ansatz(ansatz, x),
        }
    }

    pub fn protocol(&self, x: f64) -> Result<DrivingProtocol> {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let spec = self.lattice()?;
        match self.kind {
            ModelKind::Minimal => build_minimal(&spec, 2.0 * x / self.period, self.period),
            _ => build_general(&spec, &self.ansatz(x), self.period),
        }
    }

    pub fn floquet_operator(&self, x: f64) -> Result<ComplexMatrix> {
        evolve_protocol(&self.protocol(x)?)
    }

    pub fn parity(&self) -> ParityChoice {
        match &self.kind {
            ModelKind::Minimal | ModelKind::Type1 => ParityChoice::Reflection,
            ModelKind::Type2 { .. } => ParityChoice::Identity,
            ModelKind::General { parity, .. } => *parity,
        }
    }

    pub fn pt_operators(&self) -> PTOperators {
        match self.parity() {
            ParityChoice::Reflection => PTOperators::reflection(self.sites, self.band_dim()),
            ParityChoice::Identity => PTOperators::identity(self.dim()),
        }
    }

    /// True when every block commutes with every other, so the bands
    /// decouple and each can be judged on its own.
    pub fn bands_decouple(&self) -> bool {
        self.bands_decouple_at(1.0)
    }

    /// [`Self::bands_decouple`] at parameter `x`.
    pub fn bands_decouple_at(&self, x: f64) -> bool {
        let a = self.ansatz(x);
        let blocks: Vec<&ComplexMatrix> = [&a.a1, &a.a2]
            .into_iter()
            .chain(a.x1.iter())
            .chain(&a.x2)
            .chain(&a.y1)
            .chain(&a.y2)
            .collect();
        let scale = blocks.iter().map(|b| b.norm_fro()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        blocks.iter().enumerate().all(|(i, p)| {
            blocks[i + 1..]
                .iter()
                .all(|q| ComplexMatrix::commutator(p, q).norm_fro() <= 1e-12 * scale * scale)
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (N={}, eta={}, T={})", self.name(), self.sites, self.eta, self.period)
    }
}

fn scale_ansatz(a: &MultiBandSpec, s: f64) -> MultiBandSpec {
    let sc = |v: &Vec<ComplexMatrix>| v.iter().map(|m| m.scale_real(s)).collect();
    MultiBandSpec {
        range: a.range,
        a1: a.a1.scale_real(s),
        a2: a.a2.scale_real(s),
        x1: sc(&a.x1),
        x2: sc(&a.x2),
        y1: sc(&a.y1),
        y2: sc(&a.y2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::averaged_hamiltonian;
    use crate::lattice::{build_type1, build_type2};
    use crate::symmetry::check_pt_protocol;

    #[test]
    fn minimal_parameter_is_lambda() {
        let m = ModelSpec { period: 2.0, ..ModelSpec::minimal(6, 0.0) };
        let p = m.protocol(1.5).unwrap();
        assert_eq!(p.lambda, Some(1.5));
        assert_eq!(p.steps[0].hamiltonian[(0, 1)].re, 1.5);
    }

    #[test]
    fn presets_match_direct_builders() {
        let spec = LatticeSpec::open(7, 2).unwrap();
        let a = ModelSpec::type1(7, 0.0).protocol(0.9).unwrap();
        assert_eq!(a, build_type1(&spec, 0.9, 1.0).unwrap());
        let b = ModelSpec::type2(7, 0.0, 0.3).protocol(0.8).unwrap();
        assert_eq!(b, build_type2(&spec, 0.8, 0.3, 1.0).unwrap());
    }

    #[test]
    fn presets_pass_protocol_pt() {
        for m in [ModelSpec::minimal(8, 0.0), ModelSpec::type1(8, 0.0), ModelSpec::type2(8, 0.0, 0.5)] {
            let r = check_pt_protocol(&m.protocol(1.1).unwrap(), &m.pt_operators()).unwrap();
            assert!(r.passed, "{m}");
        }
    }

    #[test]
    fn general_kind_scales_blocks() {
        let m = ModelSpec {
            kind: ModelKind::General { ansatz: type1_ansatz(0.4), parity: ParityChoice::Reflection },
            sites: 6,
            eta: 0.0,
            period: 1.0,
        };
        let h0 = averaged_hamiltonian(&m.protocol(2.0).unwrap());
        let h1 = averaged_hamiltonian(&m.protocol(1.0).unwrap());
        assert!(h0.max_abs_diff(&h1.scale_real(2.0)) < 1e-15);
    }

    #[test]
    fn band_decoupling() {
        assert!(ModelSpec::minimal(6, 0.0).bands_decouple());
        assert!(ModelSpec::type1(6, 0.0).bands_decouple());
        assert!(!ModelSpec::type2(6, 0.0, 0.5).bands_decouple());
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::new(ModelKind::Minimal, 1, 0.0, 1.0).is_err());
        assert!(ModelSpec::new(ModelKind::Type2 { t2: 0.5 }, 4, 0.0, 1.0).is_err());
        assert!(ModelSpec::new(ModelKind::Minimal, 4, 0.0, -1.0).is_err());
        assert!(ModelSpec::new(ModelKind::Type2 { t2: 0.5 }, 5, 0.0, 1.0).is_ok());
    }
}
