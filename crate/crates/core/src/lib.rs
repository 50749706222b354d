//! Dense Gaussian splat initialization.
//!
//! Given calibrated camera poses and dense pixel correspondences between
//! each reference view and its nearest neighbors, this crate triangulates
//! matched pixels, keeps the ones that are both confident and geometrically
//! consistent, samples them uniformly per reference view, fits per-splat
//! spherical harmonics from multi-view colors and exports a trainer-ready
//! PLY file.
//!
//! The stages map onto modules:
//!
//! - [`camera`]: pinhole cameras, COLMAP text ingestion, projection and
//!   pose-proximity neighbor selection.
//! - [`correspondence`]: match records and the EDGC binary file format.
//! - [`triangulate`]: two-view linear least-squares triangulation and
//!   reprojection errors in normalized device coordinates.
//! - [`sampling`]: eligibility thresholds, per-view distributions and
//!   seeded sampling without replacement.
//! - [`sh`]: degree-3 real spherical harmonics and least-squares fitting.
//! - [`splat`]: Gaussian parameters, noise perturbation and PLY export.
//! - [`synth`]: synthetic ground-truth scenes used for verification.
//! - [`pipeline`]: end-to-end orchestration and reporting.

pub mod camera;
pub mod correspondence;
mod error;
pub mod pipeline;
pub mod sampling;
pub mod sh;
pub mod splat;
pub mod synth;
pub mod triangulate;

pub use error::{Error, Result};
