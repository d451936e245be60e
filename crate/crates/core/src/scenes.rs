//! Small procedural scenes with known geometry.
//!
//! Each quad of a scene gets its own rectangular chart in UV space so every
//! scene can be baked into an atlas directly.

use nalgebra::{Point3, Vector2, Vector3};

use crate::geometry::{rasterize_gbuffer, Camera, GBuffer, GeometryError, TriangleMesh};
use crate::imaging::{ColorSpace, ImageF};

/// Planar quad `origin + s·edge_u + t·edge_v`, `(s, t) ∈ [0,1]²`, mapped to
/// the UV rectangle `[u0, u1] × [v0, v1]`. The normal is `edge_u × edge_v`.
pub fn quad(
    origin: Point3<f64>,
    edge_u: Vector3<f64>,
    edge_v: Vector3<f64>,
    uv_rect: [f64; 4],
) -> TriangleMesh {
    let [u0, v0, u1, v1] = uv_rect;
    let n = edge_u.cross(&edge_v).normalize();
    TriangleMesh {
        positions: vec![origin, origin + edge_u, origin + edge_u + edge_v, origin + edge_v],
        normals: vec![n; 4],
        uvs: vec![
            Vector2::new(u0, v0),
            Vector2::new(u1, v0),
            Vector2::new(u1, v1),
            Vector2::new(u0, v1),
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
    }
}

/// Unit quad on z = 0 spanning `[0,1]²` with identity UVs, facing +Z.
pub fn unit_quad() -> TriangleMesh {
    quad(Point3::origin(), Vector3::x(), Vector3::y(), [0.0, 0.0, 1.0, 1.0])
}

/// Fronto-parallel camera at distance `distance` whose square image exactly
/// covers the unit quad. Pixel (x, y) sees uv `((x+½)/res, 1 − (y+½)/res)`.
pub fn unit_quad_camera(res: usize, distance: f64) -> Camera {
    let f = res as f64 * distance;
    Camera {
        fx: f,
        fy: f,
        cx: 0.5 * res as f64,
        cy: 0.5 * res as f64,
        width: res,
        height: res,
        world_from_camera: crate::geometry::rigid(
            nalgebra::Matrix3::identity(),
            Vector3::new(0.5, 0.5, distance),
        ),
    }
}

/// Lays out `count` charts on a square grid with a gutter between them.
pub fn chart_grid(count: usize, gutter: f64) -> Vec<[f64; 4]> {
    let side = (count as f64).sqrt().ceil().max(1.0) as usize;
    let cell = 1.0 / side as f64;
    (0..count)
        .map(|i| {
            let (cx, cy) = ((i % side) as f64 * cell, (i / side) as f64 * cell);
            [cx + gutter, cy + gutter, cx + cell - gutter, cy + cell - gutter]
        })
        .collect()
}

fn assemble(quads: &[(Point3<f64>, Vector3<f64>, Vector3<f64>)]) -> TriangleMesh {
    let charts = chart_grid(quads.len(), 0.01);
    let mut mesh = TriangleMesh::default();
    for (&(o, eu, ev), rect) in quads.iter().zip(charts) {
        mesh.append(&quad(o, eu, ev, rect));
    }
    mesh
}

/// Back wall on z = 0 (`[−2,2]×[−1.5,1.5]`) with a square occluder on z = 1
/// (`[−0.5,0.5]²`), both facing +Z.
pub fn two_plane() -> TriangleMesh {
    assemble(&[
        (Point3::new(-2.0, -1.5, 0.0), Vector3::x() * 4.0, Vector3::y() * 3.0),
        (Point3::new(-0.5, -0.5, 1.0), Vector3::x(), Vector3::y()),
    ])
}

/// Source and destination cameras for [`two_plane`]: frontal, and shifted
/// right and up so the occluder reveals wall hidden in the source view.
pub fn two_plane_cameras(res: usize) -> (Camera, Camera) {
    let src = Camera::look_at(Point3::new(0.0, 0.0, 4.0), Point3::origin(), Vector3::y(), 60.0, res, res);
    let dst = Camera::look_at(Point3::new(1.5, 0.5, 3.8), Point3::origin(), Vector3::y(), 60.0, res, res);
    (src, dst)
}

/// Wall `[−1,1]²` on z = 0 and an occluder at z = 3 over `x ∈ [−0.3, 0]`,
/// `y ∈ [−0.3, 0.3]`. Seen from (0,0,4) the occluder hides exactly the left
/// half of the wall; from (0,0,2) it is behind the camera.
pub fn half_occluder() -> TriangleMesh {
    assemble(&[
        (Point3::new(-1.0, -1.0, 0.0), Vector3::x() * 2.0, Vector3::y() * 2.0),
        (Point3::new(-0.3, -0.3, 3.0), Vector3::x() * 0.3, Vector3::y() * 0.6),
    ])
}

/// Cameras for [`half_occluder`]: source at z = 4 and destination at z = 2,
/// both framing the wall exactly.
pub fn half_occluder_cameras(res: usize) -> (Camera, Camera) {
    let make = |z: f64| {
        let f = 0.5 * res as f64 * z;
        Camera {
            fx: f,
            fy: f,
            cx: 0.5 * res as f64,
            cy: 0.5 * res as f64,
            width: res,
            height: res,
            world_from_camera: crate::geometry::rigid(
                nalgebra::Matrix3::identity(),
                Vector3::new(0.0, 0.0, z),
            ),
        }
    };
    (make(4.0), make(2.0))
}

fn push_box(quads: &mut Vec<(Point3<f64>, Vector3<f64>, Vector3<f64>)>, lo: Point3<f64>, size: Vector3<f64>) {
    let (ex, ey, ez) = (Vector3::x() * size.x, Vector3::y() * size.y, Vector3::z() * size.z);
    let hi = lo + size;
    // Top, then the four sides with outward normals.
    quads.push((Point3::new(lo.x, hi.y, hi.z), ex, -ez));
    quads.push((Point3::new(lo.x, lo.y, hi.z), ex, ey));
    quads.push((Point3::new(hi.x, lo.y, lo.z), -ex, ey));
    quads.push((Point3::new(hi.x, lo.y, hi.z), -ez, ey));
    quads.push((Point3::new(lo.x, lo.y, lo.z), ez, ey));
}

/// Open-top room: a 4 m × 4 m floor, low back and left walls, and a few
/// boxes for furniture. Meant to be viewed from outside and above.
pub fn furnished_room() -> TriangleMesh {
    let mut q = vec![
        (Point3::new(-2.0, 0.0, 2.0), Vector3::x() * 4.0, Vector3::z() * -4.0),
        (Point3::new(-2.0, 0.0, -2.0), Vector3::x() * 4.0, Vector3::y() * 0.6),
        (Point3::new(-2.0, 0.0, 2.0), Vector3::z() * -4.0, Vector3::y() * 0.6),
    ];
    push_box(&mut q, Point3::new(-1.2, 0.0, -1.6), Vector3::new(1.2, 0.45, 0.6));
    push_box(&mut q, Point3::new(0.6, 0.0, -0.2), Vector3::new(0.7, 0.35, 0.7));
    push_box(&mut q, Point3::new(-1.3, 0.0, 0.6), Vector3::new(0.5, 0.25, 0.5));
    assemble(&q)
}

/// Base camera for [`furnished_room`].
pub fn room_camera(res: usize) -> Camera {
    Camera::look_at(
        Point3::new(0.0, 3.2, 5.0),
        Point3::new(0.0, 0.3, 0.0),
        Vector3::y(),
        60.0,
        res,
        res,
    )
}

/// Latitude/longitude sphere with UVs `(φ/2π, θ/π)` and radial normals.
pub fn uv_sphere(center: Point3<f64>, radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    for r in 0..=rings {
        let theta = std::f64::consts::PI * r as f64 / rings as f64;
        for s in 0..=segments {
            let phi = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            let n = Vector3::new(theta.sin() * phi.cos(), theta.cos(), -theta.sin() * phi.sin());
            m.positions.push(center + n * radius);
            m.normals.push(n);
            m.uvs.push(Vector2::new(s as f64 / segments as f64, 1.0 - r as f64 / rings as f64));
        }
    }
    let w = (segments + 1) as u32;
    for r in 0..rings as u32 {
        for s in 0..segments as u32 {
            let a = r * w + s;
            let (b, c, d) = (a + 1, a + w, a + w + 1);
            if r != 0 {
                m.triangles.push([a, c, b]);
            }
            if r + 1 != rings as u32 {
                m.triangles.push([b, c, d]);
            }
        }
    }
    m
}

/// Smooth, deterministic material fields over UV space used as ground truth.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProceduralMaterial;

impl ProceduralMaterial {
    /// `(basecolor (sRGB-encoded), roughness, metallic)` at `uv`.
    pub fn eval(&self, uv: [f64; 2]) -> ([f32; 3], f32, f32) {
        let (u, v) = (uv[0], uv[1]);
        let tau = std::f64::consts::TAU;
        let base = [
            0.5 + 0.35 * (tau * 3.0 * u).sin() * (tau * 2.0 * v).cos(),
            0.5 + 0.3 * (tau * (2.0 * u + 3.0 * v)).sin(),
            0.45 + 0.3 * (tau * 4.0 * v).cos() * (tau * u).sin(),
        ];
        let rough = 0.55 + 0.35 * (tau * 2.5 * u).cos() * (tau * 1.5 * v).sin();
        let metal = 0.5 + 0.5 * (tau * 1.7 * (u - v)).sin();
        (base.map(|c| c as f32), rough as f32, (metal * metal) as f32)
    }
}

/// Ground-truth material maps of one view: exact per-pixel field values.
#[derive(Clone, Debug)]
pub struct ViewMaps {
    pub gbuffer: GBuffer,
    pub basecolor: ImageF,
    pub roughness: ImageF,
    pub metallic: ImageF,
}

/// Rasterizes `mesh` from `cam` and evaluates `material` at each covered
/// pixel's UV; background pixels are 0.
pub fn render_material_maps(
    mesh: &TriangleMesh,
    cam: &Camera,
    material: impl Fn([f64; 2]) -> ([f32; 3], f32, f32),
) -> Result<ViewMaps, GeometryError> {
    let g = rasterize_gbuffer(mesh, cam)?;
    let n = g.width * g.height;
    let mut base = vec![0.0f32; 3 * n];
    let mut rough = vec![0.0f32; n];
    let mut metal = vec![0.0f32; n];
    for i in 0..n {
        if g.covered(i) {
            let (b, r, m) = material([g.uv[i][0] as f64, g.uv[i][1] as f64]);
            base[3 * i..3 * i + 3].copy_from_slice(&b);
            rough[i] = r;
            metal[i] = m;
        }
    }
    let (w, h) = (g.width, g.height);
    Ok(ViewMaps {
        basecolor: ImageF::new(w, h, 3, base, ColorSpace::SRGB).expect("sized"),
        roughness: ImageF::new(w, h, 1, rough, ColorSpace::Scalar).expect("sized"),
        metallic: ImageF::new(w, h, 1, metal, ColorSpace::Scalar).expect("sized"),
        gbuffer: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_quad_camera_maps_pixels_to_uv() {
        let cam = unit_quad_camera(32, 2.0);
        let g = rasterize_gbuffer(&unit_quad(), &cam).unwrap();
        assert_eq!(g.covered_count(), 32 * 32);
        for (y, x) in [(0, 0), (5, 17), (31, 31)] {
            let uv = g.uv[g.index(x, y)];
            assert!((uv[0] as f64 - (x as f64 + 0.5) / 32.0).abs() < 1e-6);
            assert!((uv[1] as f64 - (1.0 - (y as f64 + 0.5) / 32.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn scenes_are_valid_meshes_with_disjoint_charts() {
        for m in [unit_quad(), two_plane(), half_occluder(), furnished_room(), uv_sphere(Point3::origin(), 1.0, 8, 12)] {
            m.validate().unwrap();
            assert!(m.uvs.iter().all(|t| (0.0..=1.0).contains(&t.x) && (0.0..=1.0).contains(&t.y)));
        }
        let charts = chart_grid(7, 0.01);
        for (i, a) in charts.iter().enumerate() {
            for b in &charts[i + 1..] {
                let overlap = a[0] < b[2] && b[0] < a[2] && a[1] < b[3] && b[1] < a[3];
                assert!(!overlap);
            }
        }
    }

    #[test]
    fn box_faces_point_outward() {
        let m = furnished_room();
        let (lo, hi) = m.bounds().unwrap();
        assert!(lo.y >= 0.0 && hi.y <= 0.6 + 1e-12);
        // The first box starts after floor and two walls (3 quads = 6 triangles).
        let center = Point3::new(-0.6, 0.225, -1.3);
        for t in 6..16 {
            let [a, _, _] = m.triangle_positions(t);
            assert!(m.face_normal(t).dot(&(a - center)) > 0.0, "triangle {t}");
        }
    }

    #[test]
    fn sphere_silhouette_matches_analytic_sphere() {
        let c = Point3::new(0.2, -0.1, -4.0);
        let sphere = uv_sphere(c, 1.0, 48, 96);
        let cam = Camera::look_at(Point3::origin(), Point3::new(0.0, 0.0, -1.0), Vector3::y(), 40.0, 64, 64);
        let g = rasterize_gbuffer(&sphere, &cam).unwrap();
        let proj = cam.projector().unwrap();
        let hits = |u: f64, v: f64| {
            let d = proj.ray_direction(u, v);
            let oc = c - proj.center();
            (oc - d * oc.dot(&d)).norm() <= 1.0
        };
        let oracle: Vec<bool> = (0..64 * 64).map(|i| hits((i % 64) as f64 + 0.5, (i / 64) as f64 + 0.5)).collect();
        let mut mismatches = 0;
        for y in 0..64i64 {
            for x in 0..64i64 {
                let i = (y * 64 + x) as usize;
                if g.covered(i) != oracle[i] {
                    mismatches += 1;
                    let near_edge = (-1..=1).any(|dy| {
                        (-1..=1).any(|dx| {
                            let (nx, ny) = (x + dx, y + dy);
                            (0..64).contains(&nx) && (0..64).contains(&ny) && oracle[(ny * 64 + nx) as usize] != oracle[i]
                        })
                    });
                    assert!(near_edge, "({x},{y}) outside the 1-pixel band");
                }
            }
        }
        assert!(mismatches < 20);
        assert!(g.covered_count() > 1000);
    }
}
