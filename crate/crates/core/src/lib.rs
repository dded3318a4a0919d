//! Numerics for codimension-one foliated Randers spaces.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! - [`linalg`]: small dense matrices and vector helpers.
//! - [`matinv`]: invariants `σ_λ` of matrix tuples, Newton transformations and
//!   the identity suite they satisfy.
//! - [`randers`]: pointwise Randers algebra on a single tangent space
//!   (norm, fundamental tensor, Cartan torsion, distortion, F-normals).
//! - [`grid`]: periodic structured grids, tensor fields, spectral and
//!   finite-difference derivatives, Levi-Civita machinery of the base metric,
//!   quadrature and the example catalog.
//! - [`extrinsic`]: the Riemannian metric `g = g_n` built from the Randers
//!   structure and the leaf normal, and the shape operators, curvature vectors
//!   and Cartan terms computed both directly and from closed forms.
//! - [`verify`]: integral formulae and inequalities evaluated as quadrature
//!   residuals with structured reports.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod extrinsic;
pub mod grid;
pub mod linalg;
pub mod matinv;
pub mod randers;
pub mod verify;

mod float;

pub use error::{Error, Result};
pub use linalg::Matrix;
