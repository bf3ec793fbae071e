mod eig;
mod expm;
mod logm;
mod lu;
mod matrix;
mod schur;
mod tolerances;

pub use eig::{eig_general, spectral_norm, EigDecomposition};
pub use expm::{mat_exp, mat_exp_pade};
pub use logm::{mat_log_unitary, mat_log_unitary_with, quasienergy_from_eigenvalue, LogMethod, MatrixLog};
pub use lu::{det, inverse, Lu};
pub use matrix::{ComplexMatrix, C64, I, ONE, ZERO};
pub use schur::{complex_schur, eigenvalues, hessenberg, Schur};
pub use tolerances::Tolerances;

