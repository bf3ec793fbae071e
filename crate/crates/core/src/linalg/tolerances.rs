use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the solvers and the audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on `‖M v − ξ v‖₂ / ‖M‖_F` for a well-conditioned eigenpair.
    pub residual: f64,
    /// Bound on `‖U U† − I‖_F` when a matrix is treated as unitary.
    pub unitarity: f64,
    /// Eigenvalues whose argument lies within this distance of ±π are snapped
    /// onto the `−π/T` side of the quasienergy zone.
    pub branch_guard: f64,
    /// Eigenvalues within this distance of the cut are flagged.
    pub branch_flag: f64,
    /// Above this eigenvector condition estimate the logarithm switches to
    /// the Schur-form algorithm.
    pub log_condition_max: f64,
    /// Defect bound for the protocol-level PT condition.
    pub pt_protocol: f64,
    /// Defect bound for `P conj(U) P U = I`.
    pub pt_floquet: f64,
    /// Bound for Bloch-space Hermiticity and commutation checks.
    pub bloch: f64,
    /// Relative zero threshold for the hopping-commutator inequalities.
    pub hopping_zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            unitarity: 1e-10,
            branch_guard: 1e-12,
            branch_flag: 1e-10,
            log_condition_max: 1e8,
            pt_protocol: 1e-12,
            pt_floquet: 1e-9,
            bloch: 1e-12,
            hopping_zero: 1e-12,
        }
    }
}
