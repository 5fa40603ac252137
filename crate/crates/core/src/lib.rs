//! Compressible viscous fluid over a (visco)elastic plate, solved on the fixed
//! ALE reference domain, together with the energy and relative-entropy
//! functionals used to study stability and weak-strong uniqueness.

// `!(x > 0.0)` rejects NaN on purpose; stencils index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod fluid;
mod fv;
pub mod geometry;
pub mod grid;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod mms;
pub mod plate;
pub mod regularity;
pub mod scenario;
pub mod spectral;
pub mod stencil;

pub use error::{Error, InitialDataError, Result};
pub use grid::{Grid, PlateField, ScalarField, TensorField, Topology, VectorField};
