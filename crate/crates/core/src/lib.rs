//! Gradient-descent path planning on planar polygonal domains.
//!
//! Points of the domain are described by *reduced coordinates*: the harmonic
//! measures of `n` boundary segments, computed once on a dense triangulation
//! by a cotangent-Laplacian solve. An f-divergence between coordinate
//! vectors then acts as a distance to a target whose negative gradient has
//! no spurious local minima, which drives both a mesh-based planner and a
//! greedy routing graph over sampled sites.

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coords;
pub mod disk;
pub mod divergence;
pub mod error;
pub mod geometry;
pub mod planner;
pub mod routing;
pub mod svg;

pub use error::{Error, Result};
