//! Dense complex linear algebra over labelled tensor-product spaces.

mod entropy;
mod linalg;
mod matrix;
mod ops;
pub mod random;
mod wires;

pub use entropy::{
    entropy_of_spectrum, mutual_information, quantum_relative_entropy, shannon_entropy, state_spectrum,
    trace_distance, von_neumann_entropy,
};
pub use linalg::{eigh, eigvalsh, hermitian_function, i_times, matrix_exp, solve};
pub use matrix::{c, kron, kron_all, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64};
pub use ops::{partial_contract, partial_trace, permute_subsystems, reorder_to, trace_out};
pub(crate) use ops::check_wired;
pub use wires::{Direction, SpaceLabel, Wire, WireList};

/// Eigenvalues at or below this fraction of the trace count as zero.
pub const EPS_EIG: f64 = 1e-10;
/// Positivity tolerance, relative to the trace.
pub const EPS_POS: f64 = 1e-8;
/// Trace tolerance.
pub const EPS_TR: f64 = 1e-8;
/// Support-overlap tolerance for relative entropy.
pub const EPS_SUP: f64 = 1e-8;
