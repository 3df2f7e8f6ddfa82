//! Exact and sampled simulation of W-class entanglement distillation.
//!
//! A non-maximally entangled W state `Σ_k c_k |0…1_k…0⟩` shared by `N` users
//! is turned into `|W_N⟩` by local operations and post-selection. Each user
//! but the one holding the smallest `|c_k|` couples their particle to an
//! ancilla and measures it; the run succeeds with probability
//! `N · min_k |c_k|²`.
//!
//! * [`linalg`]: small dense complex matrices, Hermitian eigensolver, `exp(-iHt)`.
//! * [`statevec`]: tensor-product state vectors, local operators, projective measurement.
//! * [`protocol`]: the ancilla-qubit protocol run exactly over all branches.
//! * [`cavity`]: the same protocol with atoms and Jaynes–Cummings cavities.
//! * [`montecarlo`]: seeded per-trial sampling of either variant.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cavity;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod protocol;
pub mod statevec;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, C64};
pub use statevec::{StateVector, SubsystemLayout};
