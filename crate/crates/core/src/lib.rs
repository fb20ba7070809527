//! Solvers for the non-overlapping sparse group Lasso problem
//!
//! ```text
//! minimize over x:  1/2 ||A x - b||^2 + lambda1 ||x||_1
//!                   + lambda2 * sum_l w_l ||x_{G_l}||
//! ```
//!
//! with the features partitioned into disjoint groups `G_l`.
//!
//! Two solvers share the problem representation:
//!
//! * [`alm::alm_solve`] — an augmented Lagrangian method on the dual whose
//!   subproblems are minimized by an inexact semismooth Newton iteration.
//!   The Newton systems exploit the structured sparsity of the proximal
//!   map's generalized Jacobian ([`jacobian`], [`newton_system`]), so their
//!   cost scales with the number of active coordinates rather than `n`.
//! * [`admm::admm_solve`] — a first-order dual ADMM baseline with a cached
//!   `m x m` factorization.
//!
//! Everything numeric is generic over the scalar type through
//! [`float::FloatT`] (`f32` or `f64`); the `*64` aliases below fix the
//! common choice. [`data_io`] covers LIBSVM-format ingestion, synthetic
//! instance generation, and report serialization.

pub mod admm;
pub mod alm;
pub mod data_io;
pub mod error;
pub mod float;
pub mod jacobian;
pub mod linalg;
pub mod model;
pub mod newton_system;
pub mod prox;
pub mod ssn;

pub use error::{Result, SglError};
pub use float::FloatT;

pub type DesignMatrix64 = model::DesignMatrix<f64>;
pub type GroupPartition64 = model::GroupPartition<f64>;
pub type SglProblem64 = model::SglProblem<f64>;
pub type PrimalDualPoint64 = model::PrimalDualPoint<f64>;
pub type AlmParams64 = alm::AlmParams<f64>;
pub type AdmmParams64 = admm::AdmmParams<f64>;
pub type SsnParams64 = ssn::SsnParams<f64>;
