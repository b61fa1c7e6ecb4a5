//! Discretized first-order Hamiltonian gauge theory on a boundary collar.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod mesh;
pub mod pca;
pub mod reduction;
pub mod rng;
pub mod linalg;

pub use error::{Error, Result};
