//! Simulation of magnon-mediated two-qubit gates between flux-tunable transmons.
//!
//! The crate follows the physical pipeline end to end: device parameters and
//! magnet geometry give coupling constants, which give gate Hamiltonians and
//! Lindblad dissipators, which give a dissipative gate channel whose average
//! gate fidelity is measured against the ideal unitary.
//!
//! Conventions: energies are configured as frequencies in Hz (E/h) and carried
//! internally as angular frequencies with hbar = 1. Subsystems are ordered
//! (q1, q2, m). Density matrices are vectorized by stacking columns.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod config;
pub mod constants;
pub mod device;
pub mod error;
pub mod fidelity;
pub mod geometry;
pub mod lindblad;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod reports;
pub mod sw;
pub mod sweep;

pub use error::{Error, Result};
