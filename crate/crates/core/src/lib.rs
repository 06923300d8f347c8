//! Phase-space (Wigner) evaluation of traces and counting statistics for
//! thermal states of Bogolubov-dressed boson modes.
//!
//! The crate is organised in layers:
//!
//! - [`phase_space`]: zero-mean complex Gaussians on `2n`-dimensional phase
//!   space, with closed-form products and integrals.
//! - [`symplectic`]: linear similarity transformations of ladder operators
//!   (`V K Vᵀ = K`) and their action `W(α) ↦ W(α V)` on Wigner functions.
//! - [`dressed_thermal`]: thermal states, the counting generating operator and
//!   dressed thermal states as Gaussian Wigner functions.
//! - [`statistics`]: closed-form generating functions, occupation
//!   distributions and Fourier extraction.
//! - [`fock`]: a brute-force truncated number-basis oracle.
//! - [`verify`]: the self-verification checks run by `dressed-modes verify`.
//!
//! ```
//! use dressed_modes::{dressed_thermal, statistics, DressedModelParams};
//!
//! let params = DressedModelParams::new(0.8, 0.6).unwrap();
//! let closed = statistics::t_closed(1.0, -0.7, &params);
//! let integral = dressed_thermal::trace_via_integral(1.0, -0.7, &params).unwrap();
//! assert!((closed - integral).norm() < 1e-10);
//! ```

// `!(x <= tol)` is used on purpose so that NaN fails.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod cli;
pub mod dressed_thermal;
pub mod error;
pub mod fock;
pub mod format;
pub mod phase_space;
pub mod statistics;
pub mod symplectic;
pub mod verify;

pub use dressed_thermal::{DressedModelParams, ModeCount};
pub use error::{Error, Result};
pub use fock::FockOperator;
pub use phase_space::{GaussianWigner, PhaseSpacePoint};
pub use statistics::{CountDistribution, YParameters};
pub use symplectic::{SymplecticForm, SymplecticTransform};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
