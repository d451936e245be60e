use nalgebra::{Point3, Vector2, Vector3};

use super::GeometryError;

/// Indexed triangle mesh with one position, normal and UV per vertex.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub positions: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub uvs: Vec<Vector2<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.positions.len();
        if self.normals.len() != n {
            return Err(GeometryError::InvalidMesh(format!(
                "{} normals for {n} vertices",
                self.normals.len()
            )));
        }
        if self.uvs.len() != n {
            return Err(GeometryError::MissingUv(format!(
                "{} uvs for {n} vertices",
                self.uvs.len()
            )));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {t} indexes past {n} vertices"
                )));
            }
        }
        for (i, nrm) in self.normals.iter().enumerate() {
            if (nrm.norm() - 1.0).abs() > 1e-4 {
                return Err(GeometryError::InvalidMesh(format!(
                    "normal {i} has length {}",
                    nrm.norm()
                )));
            }
        }
        Ok(())
    }

    pub fn triangle_positions(&self, t: usize) -> [Point3<f64>; 3] {
        self.triangles[t].map(|i| self.positions[i as usize])
    }

    /// Unit geometric normal from the winding order (zero for degenerate triangles).
    pub fn face_normal(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_positions(t);
        (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vector3::zeros)
    }

    /// Point, normal and uv at barycentric coordinates on triangle `t`.
    pub fn interpolate(
        &self,
        t: usize,
        bary: [f64; 3],
    ) -> (Point3<f64>, Vector3<f64>, Vector2<f64>) {
        let idx = self.triangles[t].map(|i| i as usize);
        let p = Point3::from(
            self.positions[idx[0]].coords * bary[0]
                + self.positions[idx[1]].coords * bary[1]
                + self.positions[idx[2]].coords * bary[2],
        );
        let n = self.normals[idx[0]] * bary[0]
            + self.normals[idx[1]] * bary[1]
            + self.normals[idx[2]] * bary[2];
        let n = n.try_normalize(1e-12).unwrap_or_else(|| self.face_normal(t));
        let uv = self.uvs[idx[0]] * bary[0] + self.uvs[idx[1]] * bary[1] + self.uvs[idx[2]] * bary[2];
        (p, n, uv)
    }

    /// Axis-aligned bounds, `None` for a mesh without vertices.
    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.positions.first()?;
        Some(self.positions.iter().fold((first, first), |(lo, hi), p| {
            (lo.inf(p), hi.sup(p))
        }))
    }

    /// Center of the axis-aligned bounding box.
    pub fn bbox_centroid(&self) -> Option<Point3<f64>> {
        self.bounds().map(|(lo, hi)| nalgebra::center(&lo, &hi))
    }

    /// Appends another mesh, re-indexing its triangles.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.positions.len() as u32;
        self.positions.extend_from_slice(&other.positions);
        self.normals.extend_from_slice(&other.normals);
        self.uvs.extend_from_slice(&other.uvs);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }
}

/// Area-weighted per-vertex normals accumulated per position group.
///
/// `group[v]` identifies vertices sharing one position (OBJ `v` index) so
/// that UV seams do not split the smoothing.
pub(crate) fn area_weighted_normals(
    positions: &[Point3<f64>],
    triangles: &[[u32; 3]],
    group: &[usize],
    group_count: usize,
) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); group_count];
    for tri in triangles {
        let [a, b, c] = tri.map(|i| positions[i as usize]);
        // Cross product length is twice the area, so this is area weighting.
        let n = (b - a).cross(&(c - a));
        for &i in tri {
            acc[group[i as usize]] += n;
        }
    }
    group
        .iter()
        .map(|&g| acc[g].try_normalize(1e-300).unwrap_or_else(Vector3::z))
        .collect()
}
