//! Strongly typed tensor calculus on vector bundles over single-chart
//! Riemannian manifolds, with covariant calculus of variations on top.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the end of this file fix `f64`.

// Index loops mirror the tensor index notation; `!(x > y)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod bundle;
pub mod covariant;
pub mod dsl;
pub mod error;
pub mod linalg;
pub mod manifolds;
pub mod scalar;
pub mod tensor;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision instantiations of the generic types.
pub type Tensor = tensor::TypedTensor<f64>;
pub type Field = covariant::TensorField<f64>;
pub type Manifold = manifolds::RiemannianManifold<f64>;
pub type Map = manifolds::SmoothMap<f64>;
pub type Problem = variational::EnergyProblem<f64>;
pub type Configuration = variational::FieldConfiguration<f64>;
pub type Variation = variational::VariationField<f64>;
pub type Context = dsl::EvalContext<f64>;
