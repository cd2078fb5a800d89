//! Metrics on spheres all of whose equators are minimal hypersurfaces, built from
//! positive algebraic curvature tensors, together with numerical checks of the
//! correspondence and spectral/integral-geometric analysis of the equators.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tensor contractions read closer to index notation with explicit index loops.
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod correspondence;
pub mod error;
pub mod io;
pub mod jet;
pub mod quadrature;
pub mod sphere;
pub mod tensor;
pub mod verification;

pub use error::{Error, Result};
