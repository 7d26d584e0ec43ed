//! Mesh reconstruction from a handful of orthographic views.
//!
//! Given per-view masks, camera-space normal maps and RGB images, the
//! pipeline estimates an initial closed mesh by integrating the front and
//! back normal maps, refines it with differentiable rasterization and
//! remeshing, reconciles inconsistent views through per-vertex explicit
//! targets, and finally colors the surface.

// Negated float comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod init;
pub mod metrics;
pub mod opt;
pub mod pipeline;
pub mod raster;
pub mod refine;
pub mod views;

pub use error::{Error, Result};

/// 3-vector used for positions, normals and colors.
pub type Vec3 = nalgebra::Vector3<f64>;
