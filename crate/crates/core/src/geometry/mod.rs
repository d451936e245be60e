//! Meshes, cameras and the software rasterizer.

mod bvh;
mod camera;
mod contour;
mod mesh;
mod obj;
mod orbit;
mod raster;

pub use bvh::{Bvh, RayHit};
pub use camera::{Camera, Projector};
pub use contour::{contour_map, ContourParams};
pub use mesh::TriangleMesh;
pub use obj::{load_mesh, parse_obj, save_mesh, to_obj_string};
pub use orbit::{orbit_cameras, OrbitSpec};
pub use raster::{rasterize_gbuffer, DepthMap, GBuffer, NO_TRIANGLE};

pub(crate) use camera::rigid;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed OBJ record on line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("mesh is missing texture coordinates: {0}")]
    MissingUv(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),
    #[error("degenerate orbit pivot: {0}")]
    DegeneratePivot(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
