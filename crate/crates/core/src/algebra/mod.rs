//! Dense and sparse complex linear algebra on composite Hilbert spaces.

pub mod eigen;
pub mod expm;
pub mod layout;
pub mod matrix;
pub mod ops;
pub mod sparse;

pub use eigen::{eigh, eigvalsh, min_eigenvalue, trace_distance, HermitianEigen};
pub use expm::matrix_exp;
pub use layout::SpaceLayout;
pub use matrix::{solve, ComplexMatrix};
pub use ops::{
    annihilation, creation, embed, fock_state, kron, kron_all, number, partial_trace, projector, thermal_state,
};
pub use sparse::CsrMatrix;

pub use num_complex::Complex64 as C64;
