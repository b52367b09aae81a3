//! Numerical toolkit for Hamiltonian-recognition protocols on a single
//! qubit: QSP phase synthesis, exact statevector simulation of the binary
//! and ternary recognition circuits, tester performance operators, comb
//! constraint checking, dual optimality certificates, and a small interior
//! point SDP for general-axis tradeoff curves.

pub mod bloch;
pub mod cheb;
pub mod error;
mod lapack;
pub mod linalg;
pub mod protocols;
pub mod qsp;
pub mod sdp;
pub mod state;
pub mod tester;

pub use bloch::{frame_unitary, rotation_gate, BlochHamiltonian};
pub use error::{Error, Result};
pub use linalg::{choi_vec, hermitian_min_eig, kron, C64, ComplexMatrix};
pub use state::StateVector;
