//! Bayesian inversion primitives with brute-force oracles.
//!
//! Densities and their covariant transforms, forward models, conditioning on
//! curves (naive restriction and slab limits), a two-level hierarchical toy,
//! and evidence computations for families of models of different dimension.
//! Everything here is `no_std` with `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod conditioning;
pub mod density;
pub mod diffeo;
pub mod domain;
pub mod error;
pub mod forward;
pub mod hierarchical;
pub mod oracle;
pub mod transdim;
pub mod units;
pub mod verify;

pub use density::{Density, DensityKind, DiscreteDistribution};
pub use diffeo::{CoordMap, Diffeomorphism};
pub use domain::{BoxSupport, Interval};
pub use error::{Error, Result};
pub use forward::{graph_restrict, ForwardModel};
pub use oracle::IntegralResult;
pub use units::{Quantity, UnitSignature};
