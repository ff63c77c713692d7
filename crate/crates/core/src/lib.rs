//! Conditional preparation of spin-squeezed and Schrödinger-cat states of a
//! collective atomic spin by photon counting on a four-wave-mixing signal.
//!
//! The crate is split along the physics:
//!
//! * [`collective_spin`]: Dicke-basis states, moments, squeezing metrics and
//!   Husimi distributions.
//! * [`atom_dynamics`]: the single-atom double-Λ equations of motion, their
//!   perturbative solutions and the dark-state balance.
//! * [`signal_field`]: source terms, coupling constants and 1-D propagation
//!   of the generated signal.
//! * [`measurement`]: photon statistics of the signal mode and the
//!   conditional collapse of the atoms, ideal or lossy.
//! * [`oracle`]: small brute-force reference computations (truncated Fock
//!   space evolution, factorial coefficients, closed-form propagation) used to
//!   cross-check the fast paths.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom_dynamics;
pub mod collective_spin;
pub mod constants;
mod error;
pub mod measurement;
pub mod oracle;
pub mod signal_field;
mod warning;

pub use error::{Error, Result};
pub use warning::Warning;

pub use num_complex::Complex64;
