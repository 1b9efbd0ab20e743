//! Two-level trust-region optimization with randomly sketched subspaces.
//!
//! The two-level method augments the classical trust-region step with a
//! second search direction obtained by accurately minimizing the quadratic
//! model restricted to a random low-dimensional subspace, then composes the
//! two through an extended acceptance ratio. This crate provides:
//!
//! - [`data`]: LIBSVM-format parsing into an immutable sparse dataset;
//! - [`losses`]: regularized logistic and sigmoid least-squares objectives
//!   with exact gradients and Hessian-vector products;
//! - [`sketch`]: Gaussian and s-hashing sketch operators and the sketched
//!   model ingredients `S g` and `S H S^T`;
//! - [`qp`]: Cauchy-point and Steihaug-Toint subproblem solvers plus a
//!   brute-force oracle for small dimensions;
//! - [`solvers`]: the two-level driver ([`solvers::tltr_solve`]), the
//!   standard trust-region baseline ([`solvers::tr_solve`]), and a sketched
//!   Newton baseline ([`solvers::sn_solve`]);
//! - [`synth`]: seeded synthetic classification instances.
//!
//! All numerical code is generic over the scalar type via [`Scalar`];
//! concrete `f64` aliases are provided at the crate root for the common
//! case. Seeded runs are deterministic: the same seed, configuration, and
//! data produce identical traces.

pub mod data;
pub mod linalg;
pub mod losses;
pub mod qp;
pub mod scalar;
pub mod sketch;
pub mod solvers;
pub mod synth;

pub use scalar::{lit, Scalar};

/// `f64` instantiations of the main entry types.
pub type Dataset64 = data::Dataset<f64>;
pub type LogisticLoss64 = losses::LogisticLoss<f64>;
pub type LeastSquaresLoss64 = losses::LeastSquaresLoss<f64>;
pub type SketchOperator64 = sketch::SketchOperator<f64>;
pub type TrConfig64 = solvers::TrConfig<f64>;
pub type SnConfig64 = solvers::SnConfig<f64>;
pub type RunTrace64 = solvers::RunTrace<f64>;

/// `f32` instantiations, for callers trading precision for memory.
pub type Dataset32 = data::Dataset<f32>;
pub type LogisticLoss32 = losses::LogisticLoss<f32>;
pub type LeastSquaresLoss32 = losses::LeastSquaresLoss<f32>;
