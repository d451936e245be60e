use crate::geometry::{TriangleMesh, NO_TRIANGLE};

/// Surface point behind one atlas texel: triangle plus barycentrics `(b1, b2)`
/// of its second and third corner (`b0 = 1 − b1 − b2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TexelSurface {
    pub tri: u32,
    pub bary: [f32; 2],
}

impl TexelSurface {
    pub const EMPTY: TexelSurface = TexelSurface { tri: NO_TRIANGLE, bary: [0.0; 2] };

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.tri == NO_TRIANGLE
    }

    #[inline]
    pub fn barycentrics(&self) -> [f64; 3] {
        let (b1, b2) = (self.bary[0] as f64, self.bary[1] as f64);
        [1.0 - b1 - b2, b1, b2]
    }
}

fn texel_coords(mesh: &TriangleMesh, t: usize, r: f64) -> [[f64; 2]; 3] {
    mesh.triangles[t].map(|i| {
        let uv = mesh.uvs[i as usize];
        [uv.x * r, (1.0 - uv.y) * r]
    })
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Barycentrics of the point of triangle `v` closest to `p`.
fn clamped_barycentrics(v: [[f64; 2]; 3], p: [f64; 2]) -> [f64; 3] {
    let area = edge(v[0], v[1], v[2]);
    if area != 0.0 {
        let b = [edge(v[1], v[2], p) / area, edge(v[2], v[0], p) / area, edge(v[0], v[1], p) / area];
        if b.iter().all(|&x| x >= 0.0) {
            return b;
        }
    }
    let mut best = (f64::INFINITY, [1.0, 0.0, 0.0]);
    for k in 0..3 {
        let (a, b) = (v[k], v[(k + 1) % 3]);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = [a[0] + t * d[0], a[1] + t * d[1]];
        let dist = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        if dist < best.0 {
            let mut bary = [0.0; 3];
            bary[k] = 1.0 - t;
            bary[(k + 1) % 3] = t;
            best = (dist, bary);
        }
    }
    best.1
}

/// Assigns a surface point to every atlas texel whose center lies in a
/// UV triangle, then grows charts by one texel so bilinear lookups near
/// chart borders never read undefined texels. Overlaps resolve to the lower
/// triangle index.
pub fn rasterize_uv(mesh: &TriangleMesh, resolution: usize) -> Vec<TexelSurface> {
    let r = resolution;
    let rf = r as f64;
    let mut out = vec![TexelSurface::EMPTY; r * r];
    for t in 0..mesh.triangle_count() {
        let v = texel_coords(mesh, t, rf);
        let area = edge(v[0], v[1], v[2]);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        let min_x = v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let x0 = (min_x - 0.5).ceil().max(0.0) as usize;
        let y0 = (min_y - 0.5).ceil().max(0.0) as usize;
        let x1 = ((max_x - 0.5).floor().min(rf - 1.0)).max(-1.0);
        let y1 = ((max_y - 0.5).floor().min(rf - 1.0)).max(-1.0);
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let i = y * r + x;
                if !out[i].is_empty() {
                    continue;
                }
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let b = [edge(v[1], v[2], p) / area, edge(v[2], v[0], p) / area, edge(v[0], v[1], p) / area];
                if b.iter().all(|&c| c >= 0.0) {
                    out[i] = TexelSurface { tri: t as u32, bary: [b[1] as f32, b[2] as f32] };
                }
            }
        }
    }

    const NEIGHBORS: [(i64, i64); 8] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)];
    let mut dilated = out.clone();
    for y in 0..r {
        for x in 0..r {
            if !out[y * r + x].is_empty() {
                continue;
            }
            let found = NEIGHBORS.iter().find_map(|&(dx, dy)| {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx >= r as i64 || ny >= r as i64 {
                    return None;
                }
                let s = out[ny as usize * r + nx as usize];
                (!s.is_empty()).then_some(s.tri)
            });
            if let Some(t) = found {
                let v = texel_coords(mesh, t as usize, rf);
                let b = clamped_barycentrics(v, [x as f64 + 0.5, y as f64 + 0.5]);
                dilated[y * r + x] = TexelSurface { tri: t, bary: [b[1] as f32, b[2] as f32] };
            }
        }
    }
    dilated
}
