use nalgebra::{Point3, Rotation3, Unit, Vector3};

use super::{rigid, Camera, GeometryError, TriangleMesh};

/// Camera path that steps elevation and azimuth about a pivot.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSpec {
    pub base: Camera,
    pub count: usize,
    /// Elevation step in degrees.
    pub delta_lat: f64,
    /// Azimuth step in degrees, about world +Y.
    pub delta_lon: f64,
    pub pivot: Point3<f64>,
}

impl OrbitSpec {
    /// Five views, 25° steps, pivot at the mesh bounding-box center.
    pub fn around_mesh(base: Camera, mesh: &TriangleMesh) -> Result<Self, GeometryError> {
        let pivot = mesh
            .bbox_centroid()
            .ok_or_else(|| GeometryError::DegeneratePivot("mesh has no vertices".into()))?;
        Ok(Self {
            base,
            count: 5,
            delta_lat: 25.0,
            delta_lon: 25.0,
            pivot,
        })
    }
}

/// Cameras for an orbit; view `i` is the base pose rotated about the pivot
/// by `R_az(i·Δlon) · R_el(i·Δlat)`.
///
/// The elevation axis is horizontal and perpendicular to the pivot→camera
/// offset, so positive `delta_lat` raises the camera. View 0 is the base.
pub fn orbit_cameras(spec: &OrbitSpec) -> Result<Vec<Camera>, GeometryError> {
    if spec.count == 0 {
        return Err(GeometryError::InvalidParameter("orbit needs at least one view".into()));
    }
    if !(spec.delta_lat.is_finite() && spec.delta_lon.is_finite()) {
        return Err(GeometryError::InvalidParameter("orbit steps must be finite".into()));
    }
    spec.base.validate()?;
    let center = spec.base.center();
    let offset = center - spec.pivot;
    let radius = offset.norm();
    if !(radius > 1e-9 * (1.0 + center.coords.norm())) {
        return Err(GeometryError::DegeneratePivot(format!(
            "pivot {:?} coincides with the camera center",
            spec.pivot
        )));
    }
    let up = Vector3::y();
    let el_axis = offset.cross(&up).try_normalize(1e-9).unwrap_or_else(|| {
        // Looking straight along the up axis: use the camera's horizontal right.
        let right = spec.base.rotation().column(0).into_owned();
        let horiz = Vector3::new(right.x, 0.0, right.z);
        -horiz.try_normalize(1e-9).unwrap_or_else(Vector3::x)
    });
    let el_axis = Unit::new_unchecked(el_axis);
    let az_axis = Unit::new_unchecked(up);

    let mut out = Vec::with_capacity(spec.count);
    out.push(spec.base.clone());
    for i in 1..spec.count {
        let k = i as f64;
        let r = Rotation3::from_axis_angle(&az_axis, (k * spec.delta_lon).to_radians())
            * Rotation3::from_axis_angle(&el_axis, (k * spec.delta_lat).to_radians());
        let rot = r.matrix() * spec.base.rotation();
        let c = spec.pivot + r * offset;
        out.push(Camera {
            world_from_camera: rigid(rot, c.coords),
            ..spec.base.clone()
        });
    }
    Ok(out)
}
