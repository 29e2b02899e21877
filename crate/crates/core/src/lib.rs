//! Finite-truncation toolkit for the quantized Yang-Mills energy functional.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: orthonormal bases of compact semi-simple Lie algebras,
//!   brackets, the trace form and the quartic bracket contraction.
//! * [`lattice`]: gauged gradient/divergence/Laplacian on a periodic 3-torus,
//!   the constraint projector and gauge-orbit minimisation.
//! * [`dynamics`]: temporal-gauge evolution of Cauchy data with energy and
//!   Gauss-law monitoring.
//! * [`symbols`]: exact polynomial symbols in `(z*, z)` and the Gaussian
//!   smoothing flows relating normal, Weyl and anti-normal orderings.
//! * [`fock`]: degree-truncated bosonic Fock spaces and quantization maps.
//! * [`spectrum`]: the energy operator, its n-boson blocks and gap analysis.

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod lattice;
pub mod spectrum;
pub mod symbols;

pub use error::{Error, Result};
