//! Geometric and imaging core for multiview SVBRDF texturing.
//!
//! The crate covers the file-level pipeline that surrounds generative view
//! synthesis and per-view material prediction:
//!
//! - [`geometry`]: meshes, pinhole cameras, G-buffer rasterization, contour
//!   maps and orbit camera paths.
//! - [`reproject`]: depth-based inverse warping between views with
//!   disocclusion masks.
//! - [`atlas`]: texel-space merging of per-view basecolor / roughness /
//!   metallic maps, pull-push hole filling and atlas sampling.
//! - [`metrics`]: PSNR, SSIM, scale-invariant normalization, FLIP, the
//!   FLIP-space training loss and the warped-frame flicker metric.
//! - [`render`]: metallic-roughness GGX relighting of a merged atlas.
//! - [`scenes`]: small procedural scenes with analytic ground truth.

pub mod atlas;
pub mod geometry;
pub mod imaging;
pub mod metrics;
pub mod render;
pub mod reproject;
pub mod scenes;

pub use geometry::{Camera, DepthMap, GBuffer, GeometryError, OrbitSpec, TriangleMesh};
pub use imaging::{ColorSpace, ImageError, ImageF};
