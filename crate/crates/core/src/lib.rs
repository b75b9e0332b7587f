//! Gaussian process quadrature (GPQ) for Gaussian-weighted integrals.
//!
//! A GPQ rule approximates `∫ g(x) N(x | m, P) dx` by `Σ W_i g(m + √P ξ_i)`, where the
//! unit sigma-points `ξ_i` are chosen freely and the weights come from a Gaussian process
//! model of the integrand: `(K + σ² I) W = q`, with `K` the kernel Gram matrix of the points
//! and `q` the kernel mean embeddings under `N(0, I)`.
//!
//! With polynomial (Hermite) kernels the weights reduce exactly to the classical unscented
//! transform and Gauss–Hermite rules; with the squared exponential kernel they converge to
//! the unscented weights as the length scale grows. The same rules drive the sigma-point
//! Kalman filter and RTS smoother in [`filtering`].
//!
//! Module map:
//! - [`hermite`]: probabilists' Hermite polynomials, multi-indices, Gauss–Hermite nodes.
//! - [`kernels`]: covariance functions with closed-form Gaussian integrals.
//! - [`points`]: unit sigma-point generators (UT, cubature, fifth-order symmetric,
//!   Gauss–Hermite, random, Hammersley, minimum-variance).
//! - [`quadrature`]: GPQ weights, posterior variance, rule application, the GP transform.
//! - [`filtering`]: Gaussian filter and RTS smoother over any quadrature rule.
//! - [`models`]: UNGM, coordinated-turn bearings-only tracking, moment test integrands.
//! - [`experiments`]: configurable experiment runners and reports.

mod dd;
pub mod error;
pub mod experiments;
pub mod filtering;
pub mod hermite;
pub mod kernels;
pub mod linalg;
pub mod models;
pub mod points;
pub mod quadrature;

pub use error::{Error, Result};
pub use filtering::{FilterOutput, GaussianState, StateSpaceModel};
pub use hermite::MultiIndex;
pub use kernels::Kernel;
pub use points::{ClassicalRule, PointSetKind, UnitPointSet};
pub use quadrature::{QuadratureRule, TransformResult};
