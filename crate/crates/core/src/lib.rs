//! Generalized regenerating codes for clustered storage.
//!
//! A file is spread over `n` clusters of `m` nodes each. Any `k` clusters
//! recover the file; a failed node is rebuilt from `beta` symbols sent by
//! each of `d` remote clusters plus the content of `ell` surviving nodes in
//! its own cluster.
//!
//! The crate provides:
//! - [`bounds`]: capacity and bandwidth bounds in exact arithmetic,
//! - [`ifg`]: information flow graphs and max-flow verification of the bounds,
//! - [`classical`]: MDS and product-matrix MBR/MSR component codes,
//! - [`exact`]: the exact-repair generalized code built from those components,
//! - [`functional`]: the functional-repair code with history-rewind collection,
//! - [`sim`]: a random linear network coding repair simulator,
//! - [`secure`]: eavesdropper-secure variants and a zero-leakage checker.

pub mod bounds;
pub mod classical;
pub mod error;
pub mod exact;
pub mod functional;
pub mod gf;
pub mod ifg;
pub mod linalg;
pub mod prf;
pub mod secure;
pub mod sim;

pub use bounds::{IntraParams, OperatingPoint, PointKind, SystemParams};
pub use error::{Error, Result};
pub use gf::{FieldWidth, Symbol};
pub use linalg::Matrix;
