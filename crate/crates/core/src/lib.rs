//! ADI time stepping and von Neumann stability analysis for multidimensional
//! diffusion equations with mixed derivative terms.
//!
//! The library covers the full pipeline for the periodic model problem
//! `u_t = sum_{i,j} d_ij u_{x_i x_j}` on the unit cube:
//!
//! * [`model`] — diffusion matrices, mixed-stencil weights, problem setup;
//! * [`discretization`] — uniform periodic grids and the matrix-free split
//!   finite-difference operator `A = A_0 + A_1 + ... + A_k`;
//! * [`adi`] — the Douglas (Do), Craig–Sneyd (CS), modified Craig–Sneyd (MCS)
//!   and Hundsdorfer–Verwer (HV) splitting schemes with cyclic tridiagonal
//!   line solves;
//! * [`symbol`] — scaled Fourier symbols of the split operator, scheme
//!   amplification factors and brute-force stability sweeps;
//! * [`bounds`] — sharp lower bounds on the implicitness parameter `theta`
//!   for unconditional stability;
//! * [`reference`] — exact solutions of the semidiscrete system via
//!   per-dimension discrete Fourier transforms;
//! * [`harness`] — convergence experiments, theta selection policies and
//!   deterministic CSV output.

// Validation code uses `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adi;
pub mod bounds;
pub mod discretization;
mod error;
pub mod harness;
pub mod model;
pub mod reference;
pub mod symbol;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
