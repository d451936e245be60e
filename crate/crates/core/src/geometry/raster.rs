//! Z-buffered, perspective-correct triangle rasterization into a G-buffer.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{Camera, GeometryError, TriangleMesh};
use crate::imaging::{ColorSpace, ImageF};

/// Sentinel triangle id for uncovered pixels.
pub const NO_TRIANGLE: u32 = u32::MAX;

/// Camera-space clip distance; geometry closer than this is cut away.
const NEAR: f64 = 1e-3;

const BAND_ROWS: usize = 8;

/// Per-pixel view depth, +∞ where nothing was rasterized.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl DepthMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![f32::INFINITY; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn is_covered(&self, x: usize, y: usize) -> bool {
        self.get(x, y).is_finite()
    }

    pub fn coverage(&self) -> Vec<bool> {
        self.data.iter().map(|d| d.is_finite()).collect()
    }

    pub fn to_image(&self) -> ImageF {
        ImageF::new(self.width, self.height, 1, self.data.clone(), ColorSpace::Scalar)
            .expect("depth map is well formed")
    }

    /// Reads the first channel of `img`; non-finite or non-positive values are empty.
    pub fn from_image(img: &ImageF) -> Self {
        let data = img
            .data()
            .iter()
            .step_by(img.channels())
            .map(|&d| if d.is_finite() && d > 0.0 { d } else { f32::INFINITY })
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }
}

/// Rasterized geometry for one camera.
///
/// Invariant: `tri_id[i] != NO_TRIANGLE` ⇔ `depth[i]` finite.
#[derive(Clone, Debug, PartialEq)]
pub struct GBuffer {
    pub width: usize,
    pub height: usize,
    /// View-space distance along −Z, +∞ where empty.
    pub depth: Vec<f32>,
    /// World-space unit normals (zero where empty).
    pub normal: Vec<[f32; 3]>,
    pub uv: Vec<[f32; 2]>,
    pub tri_id: Vec<u32>,
}

impl GBuffer {
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn covered(&self, i: usize) -> bool {
        self.tri_id[i] != NO_TRIANGLE
    }

    pub fn coverage(&self) -> Vec<bool> {
        self.tri_id.iter().map(|&t| t != NO_TRIANGLE).collect()
    }

    pub fn covered_count(&self) -> usize {
        self.tri_id.iter().filter(|&&t| t != NO_TRIANGLE).count()
    }

    pub fn depth_map(&self) -> DepthMap {
        DepthMap {
            width: self.width,
            height: self.height,
            data: self.depth.clone(),
        }
    }

    pub fn depth_image(&self) -> ImageF {
        self.depth_map().to_image()
    }

    pub fn normal_image(&self) -> ImageF {
        let data = self.normal.iter().flatten().copied().collect();
        ImageF::new(self.width, self.height, 3, data, ColorSpace::Scalar)
            .expect("normal buffer is well formed")
    }

    pub fn uv_image(&self) -> ImageF {
        let data = self.uv.iter().flatten().copied().collect();
        ImageF::new(self.width, self.height, 2, data, ColorSpace::Scalar)
            .expect("uv buffer is well formed")
    }

    pub fn coverage_image(&self) -> ImageF {
        let data = self
            .tri_id
            .iter()
            .map(|&t| if t != NO_TRIANGLE { 1.0 } else { 0.0 })
            .collect();
        ImageF::new(self.width, self.height, 1, data, ColorSpace::Scalar)
            .expect("coverage buffer is well formed")
    }
}

/// Screen-space triangle after near clipping.
struct ScreenTriangle {
    tri: u32,
    xy: [[f64; 2]; 3],
    inv_depth: [f64; 3],
    /// Barycentrics of each corner relative to the original mesh triangle.
    source_bary: [[f64; 3]; 3],
    area: f64,
    x_range: (usize, usize),
    y_range: (usize, usize),
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Top-left rule for positively oriented triangles in y-down screen space.
#[inline]
fn is_top_left(a: [f64; 2], b: [f64; 2]) -> bool {
    let dy = b[1] - a[1];
    let dx = b[0] - a[0];
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

#[inline]
fn inside(e: f64, top_left: bool) -> bool {
    e > 0.0 || (e == 0.0 && top_left)
}

fn clip_near(poly: &[(Vector3<f64>, [f64; 3])]) -> Vec<(Vector3<f64>, [f64; 3])> {
    let mut out = Vec::with_capacity(4);
    let dist = |p: &Vector3<f64>| -p.z - NEAR;
    for i in 0..poly.len() {
        let (a, ba) = poly[i];
        let (b, bb) = poly[(i + 1) % poly.len()];
        let (da, db) = (dist(&a), dist(&b));
        if da >= 0.0 {
            out.push((a, ba));
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            let p = a + (b - a) * t;
            let bary = [
                ba[0] + (bb[0] - ba[0]) * t,
                ba[1] + (bb[1] - ba[1]) * t,
                ba[2] + (bb[2] - ba[2]) * t,
            ];
            out.push((p, bary));
        }
    }
    out
}

fn setup_triangles(
    mesh: &TriangleMesh,
    cam: &Camera,
) -> Result<Vec<ScreenTriangle>, GeometryError> {
    let proj = cam.projector()?;
    let (w, h) = (cam.width as f64, cam.height as f64);
    let mut out = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let corners: Vec<(Vector3<f64>, [f64; 3])> = tri
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut b = [0.0; 3];
                b[k] = 1.0;
                (proj.to_camera(&mesh.positions[i as usize]), b)
            })
            .collect();
        let poly = clip_near(&corners);
        if poly.len() < 3 {
            continue;
        }
        let screen: Vec<([f64; 2], f64, [f64; 3])> = poly
            .iter()
            .map(|(p, b)| {
                let d = -p.z;
                (
                    [proj.cx + proj.fx * p.x / d, proj.cy - proj.fy * p.y / d],
                    1.0 / d,
                    *b,
                )
            })
            .collect();
        for k in 1..screen.len() - 1 {
            let mut c = [screen[0], screen[k], screen[k + 1]];
            let mut area = edge(c[0].0, c[1].0, c[2].0);
            if area == 0.0 || !area.is_finite() {
                continue;
            }
            if area < 0.0 {
                c.swap(1, 2);
                area = -area;
            }
            let xs = c.map(|v| v.0[0]);
            let ys = c.map(|v| v.0[1]);
            let min_x = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_x = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min_y = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let max_y = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max_x < 0.0 || max_y < 0.0 || min_x > w || min_y > h {
                continue;
            }
            let x0 = (min_x - 0.5).ceil().max(0.0);
            let x1 = (max_x - 0.5).floor().min(w - 1.0);
            let y0 = (min_y - 0.5).ceil().max(0.0);
            let y1 = (max_y - 0.5).floor().min(h - 1.0);
            if x0 > x1 || y0 > y1 {
                continue;
            }
            out.push(ScreenTriangle {
                tri: t as u32,
                xy: c.map(|v| v.0),
                inv_depth: c.map(|v| v.1),
                source_bary: c.map(|v| v.2),
                area,
                x_range: (x0 as usize, x1 as usize),
                y_range: (y0 as usize, y1 as usize),
            });
        }
    }
    Ok(out)
}

struct BandResult {
    depth: Vec<f64>,
    tri: Vec<u32>,
    bary: Vec<[f64; 3]>,
}

fn rasterize_band(
    tris: &[ScreenTriangle],
    ids: &[usize],
    width: usize,
    y_start: usize,
    y_end: usize,
) -> BandResult {
    let n = (y_end - y_start) * width;
    let mut depth = vec![f64::INFINITY; n];
    let mut tri = vec![NO_TRIANGLE; n];
    let mut bary = vec![[0.0; 3]; n];
    for &id in ids {
        let st = &tris[id];
        let [v0, v1, v2] = st.xy;
        let tl = [is_top_left(v1, v2), is_top_left(v2, v0), is_top_left(v0, v1)];
        let ya = st.y_range.0.max(y_start);
        let yb = st.y_range.1.min(y_end - 1);
        for y in ya..=yb {
            let py = y as f64 + 0.5;
            for x in st.x_range.0..=st.x_range.1 {
                let p = [x as f64 + 0.5, py];
                let e0 = edge(v1, v2, p);
                let e1 = edge(v2, v0, p);
                let e2 = edge(v0, v1, p);
                if !(inside(e0, tl[0]) && inside(e1, tl[1]) && inside(e2, tl[2])) {
                    continue;
                }
                let l = [e0 / st.area, e1 / st.area, e2 / st.area];
                let w = [
                    l[0] * st.inv_depth[0],
                    l[1] * st.inv_depth[1],
                    l[2] * st.inv_depth[2],
                ];
                let s = w[0] + w[1] + w[2];
                let d = 1.0 / s;
                let i = (y - y_start) * width + x;
                if d < depth[i] {
                    depth[i] = d;
                    tri[i] = st.tri;
                    let mut b = [0.0; 3];
                    for (k, wk) in w.iter().enumerate() {
                        let f = wk / s;
                        for (bj, sb) in b.iter_mut().zip(st.source_bary[k]) {
                            *bj += f * sb;
                        }
                    }
                    bary[i] = b;
                }
            }
        }
    }
    BandResult { depth, tri, bary }
}

/// Rasterizes `mesh` from `cam` with a z-buffer and top-left fill rule.
///
/// Depth is metric view depth; normals and UVs are interpolated
/// perspective-correctly. Equal depths resolve to the lower triangle index,
/// so the result does not depend on how rows are split across threads.
pub fn rasterize_gbuffer(mesh: &TriangleMesh, cam: &Camera) -> Result<GBuffer, GeometryError> {
    let tris = setup_triangles(mesh, cam)?;
    let (w, h) = (cam.width, cam.height);
    let bands = h.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); bands];
    for (i, st) in tris.iter().enumerate() {
        for bin in &mut bins[st.y_range.0 / BAND_ROWS..=st.y_range.1 / BAND_ROWS] {
            bin.push(i);
        }
    }
    let results: Vec<BandResult> = bins
        .par_iter()
        .enumerate()
        .map(|(b, ids)| {
            let y0 = b * BAND_ROWS;
            rasterize_band(&tris, ids, w, y0, (y0 + BAND_ROWS).min(h))
        })
        .collect();

    let mut g = GBuffer {
        width: w,
        height: h,
        depth: Vec::with_capacity(w * h),
        normal: Vec::with_capacity(w * h),
        uv: Vec::with_capacity(w * h),
        tri_id: Vec::with_capacity(w * h),
    };
    for band in results {
        for ((d, t), b) in band.depth.into_iter().zip(band.tri).zip(band.bary) {
            if t == NO_TRIANGLE {
                g.depth.push(f32::INFINITY);
                g.normal.push([0.0; 3]);
                g.uv.push([0.0; 2]);
            } else {
                let (_, n, uv) = mesh.interpolate(t as usize, b);
                g.depth.push(d as f32);
                g.normal.push([n.x as f32, n.y as f32, n.z as f32]);
                g.uv.push([uv.x as f32, uv.y as f32]);
            }
            g.tri_id.push(t);
        }
    }
    Ok(g)
}
