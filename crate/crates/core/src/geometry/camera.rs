use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Pinhole camera: intrinsics in pixels plus a rigid world pose.
///
/// Right-handed, looking down −Z with +Y up. Pixel (0, 0) is the top-left
/// pixel and its center sits at (0.5, 0.5).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraRecord", into = "CameraRecord")]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub world_from_camera: Matrix4<f64>,
}

/// On-disk form: `world_from_camera` as 16 row-major floats.
#[derive(Serialize, Deserialize)]
struct CameraRecord {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    world_from_camera: Vec<f64>,
}

impl TryFrom<CameraRecord> for Camera {
    type Error = String;

    fn try_from(r: CameraRecord) -> Result<Self, Self::Error> {
        if r.world_from_camera.len() != 16 {
            return Err(format!(
                "world_from_camera needs 16 values, got {}",
                r.world_from_camera.len()
            ));
        }
        Ok(Camera {
            fx: r.fx,
            fy: r.fy,
            cx: r.cx,
            cy: r.cy,
            width: r.width,
            height: r.height,
            world_from_camera: Matrix4::from_row_slice(&r.world_from_camera),
        })
    }
}

impl From<Camera> for CameraRecord {
    fn from(c: Camera) -> Self {
        let mut rows = Vec::with_capacity(16);
        for i in 0..4 {
            for j in 0..4 {
                rows.push(c.world_from_camera[(i, j)]);
            }
        }
        CameraRecord {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            world_from_camera: rows,
        }
    }
}

impl Camera {
    /// Camera at `eye` looking at `target`, vertical field of view in degrees,
    /// square pixels and a centered principal point.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        fov_y_deg: f64,
        width: usize,
        height: usize,
    ) -> Camera {
        let back = (eye - target).normalize();
        let right = up.cross(&back).normalize();
        let true_up = back.cross(&right);
        let rot = Matrix3::from_columns(&[right, true_up, back]);
        let f = 0.5 * height as f64 / (0.5 * fov_y_deg.to_radians()).tan();
        Camera {
            fx: f,
            fy: f,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
            world_from_camera: rigid(rot, eye.coords),
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_from_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.world_from_camera.fixed_view::<3, 1>(0, 3).into_owned())
    }

    /// World-space viewing direction (the camera's −Z axis).
    pub fn forward(&self) -> Vector3<f64> {
        -self.rotation().column(2).into_owned()
    }

    /// Same pose with a different resolution; intrinsics scale with it.
    pub fn resized(&self, width: usize, height: usize) -> Camera {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Camera {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
            world_from_camera: self.world_from_camera,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(GeometryError::DegenerateCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::DegenerateCamera(format!(
                "resolution {}x{}",
                self.width, self.height
            )));
        }
        let r = self.rotation();
        let err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if err > 1e-6 || (r.determinant() - 1.0).abs() > 1e-6 {
            return Err(GeometryError::DegenerateCamera(
                "rotation block is not orthonormal".into(),
            ));
        }
        let last = self.world_from_camera.row(3);
        if last[0] != 0.0 || last[1] != 0.0 || last[2] != 0.0 || last[3] != 1.0 {
            return Err(GeometryError::DegenerateCamera(
                "bottom row of world_from_camera must be [0 0 0 1]".into(),
            ));
        }
        Ok(())
    }

    /// Validated, precomputed projection helper.
    pub fn projector(&self) -> Result<Projector, GeometryError> {
        self.validate()?;
        let rot = self.rotation();
        let center = self.center().coords;
        let inv = rot.transpose();
        Ok(Projector {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            world_from_cam: rot,
            center,
            cam_from_world: inv,
            cam_translation: -(inv * center),
        })
    }
}

pub(crate) fn rigid(rot: Matrix3<f64>, t: Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

/// Projection/unprojection for one camera with the pose inverted once.
#[derive(Clone, Debug)]
pub struct Projector {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    world_from_cam: Matrix3<f64>,
    center: Vector3<f64>,
    cam_from_world: Matrix3<f64>,
    cam_translation: Vector3<f64>,
}

impl Projector {
    #[inline]
    pub fn to_camera(&self, p: &Point3<f64>) -> Vector3<f64> {
        self.cam_from_world * p.coords + self.cam_translation
    }

    #[inline]
    pub fn to_world(&self, p: &Vector3<f64>) -> Point3<f64> {
        Point3::from(self.world_from_cam * p + self.center)
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.center)
    }

    /// Continuous pixel coordinates and view depth of a world point, or `None`
    /// when it is not in front of the camera.
    #[inline]
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.to_camera(p);
        let depth = -c.z;
        if depth <= 0.0 {
            return None;
        }
        Some((
            self.cx + self.fx * c.x / depth,
            self.cy - self.fy * c.y / depth,
            depth,
        ))
    }

    /// World point at view depth `depth` along the ray through pixel coordinate (u, v).
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3<f64> {
        let c = Vector3::new(
            (u - self.cx) / self.fx * depth,
            -(v - self.cy) / self.fy * depth,
            -depth,
        );
        self.to_world(&c)
    }

    /// Unit world-space ray direction through pixel coordinate (u, v).
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        let c = Vector3::new((u - self.cx) / self.fx, -(v - self.cy) / self.fy, -1.0);
        (self.world_from_cam * c).normalize()
    }

    pub fn in_bounds(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}
