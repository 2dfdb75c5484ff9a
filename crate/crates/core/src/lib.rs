//! Numerical laboratory for the XXZ kink chain.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: sparse complex operators on the spin-½ product basis, dense helpers,
//!   exponential actions and a Lanczos driver.
//! * [`xxz_core`]: kink Hamiltonian, q-deformed lowering operator, kink ground states
//!   and sector-wise spectral decompositions.
//! * [`kink_profiles`]: infinite-volume magnetization profiles and matrix elements.
//! * [`perturbation`]: weak-field time evolution, Dyson partial sums, signed compositions
//!   and reduced ground-space dynamics.
//! * [`bessel`]: integer-order Bessel functions and the sum rules used by the kernels.
//! * [`stark_jacobi`]: the tilted hopping operator `αΔ + γW` and its exact propagator.
//! * [`interface_motion`]: kink magnetization profiles under the reduced dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod error;
pub mod interface_motion;
pub mod kink_profiles;
pub mod linalg;
pub mod numerics;
pub mod perturbation;
pub mod policy;
pub mod stark_jacobi;
pub mod xxz_core;

pub use error::{KinkError, Result};
pub use linalg::{SparseOperator, StateVector, C64};
pub use policy::NumericPolicy;
