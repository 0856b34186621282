//! Maximal Blaschke products with prescribed critical points.
//!
//! The crate computes the finite Blaschke product that maximizes
//! `Re f^{(N+1)}(0)` among bounded analytic functions whose derivative
//! vanishes on a prescribed finite critical set, evaluates the associated
//! conformal pseudometrics of curvature `-4`, and ships numerical suites that
//! check extremality, curvature, composition, union and boundary behaviour.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod blaschke;
pub mod disk;
pub mod error;
pub mod metric;
pub mod pde;
pub mod poly;
pub mod record;
pub mod solver;
pub mod verify;

pub use blaschke::{CriticalPoint, CriticalSet, FiniteBlaschke};
pub use disk::{DiskAutomorphism, DiskPoint, RiemannMap};
pub use error::{Error, Result};
