use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::edt::distance_transform;
use super::uv_raster::rasterize_uv;
use super::{AtlasError, SvbrdfView, SvbrdfViewSet, TextureAtlas};
use crate::geometry::{DepthMap, GeometryError, Projector, TriangleMesh};
use crate::reproject::bilinear_taps;

/// Relative depth jump that marks a view pixel as a depth edge for the
/// border falloff.
const EDGE_DEPTH_REL: f64 = 0.02;

/// Per-observation weighting used by [`bake_atlas`].
///
/// `w = cos(θ)^angle_exponent · falloff · visible`, where `falloff` ramps
/// linearly from 0 to 1 over `border_erosion` pixels away from the image
/// border and from uncovered or depth-discontinuous pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendWeights {
    pub angle_exponent: f64,
    pub border_erosion: f64,
    pub depth_eps_rel: f64,
    /// Drop observations more than 3 MAD from the per-texel median.
    pub reject_outliers: bool,
}

impl Default for BlendWeights {
    fn default() -> Self {
        Self {
            angle_exponent: 2.0,
            border_erosion: 8.0,
            depth_eps_rel: 0.01,
            reject_outliers: false,
        }
    }
}

impl BlendWeights {
    pub fn validate(&self) -> Result<(), AtlasError> {
        if !(self.angle_exponent >= 0.0 && self.angle_exponent.is_finite()) {
            return Err(AtlasError::InvalidParameter(format!("angle exponent {}", self.angle_exponent)));
        }
        if !(self.border_erosion >= 0.0 && self.border_erosion.is_finite()) {
            return Err(AtlasError::InvalidParameter(format!("border erosion {}", self.border_erosion)));
        }
        if !(self.depth_eps_rel > 0.0) {
            return Err(AtlasError::InvalidParameter(format!("depth tolerance {}", self.depth_eps_rel)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantity {
    Basecolor,
    Roughness,
    Metallic,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Basecolor, Quantity::Roughness, Quantity::Metallic];

    pub fn channels(self) -> usize {
        match self {
            Quantity::Basecolor => 3,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Basecolor => "basecolor",
            Quantity::Roughness => "roughness",
            Quantity::Metallic => "metallic",
        }
    }

    fn offset(self) -> usize {
        match self {
            Quantity::Basecolor => 0,
            Quantity::Roughness => 3,
            Quantity::Metallic => 4,
        }
    }
}

/// Border falloff of one view in `[0, 1]` per pixel.
///
/// Uncovered pixels and both sides of a depth jump count as unreliable; the
/// falloff is the distance to the nearest unreliable pixel or to the image
/// edge, divided by `erosion` and clamped.
pub fn view_falloff(depth: &DepthMap, erosion: f64) -> Vec<f32> {
    let (w, h) = (depth.width, depth.height);
    let mut bad: Vec<bool> = depth.data.iter().map(|d| !d.is_finite()).collect();
    let jump = |a: f32, b: f32| {
        a.is_finite() && b.is_finite() && ((a - b).abs() as f64) > EDGE_DEPTH_REL * a.min(b) as f64
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w && jump(depth.data[i], depth.data[i + 1]) {
                bad[i] = true;
                bad[i + 1] = true;
            }
            if y + 1 < h && jump(depth.data[i], depth.data[i + w]) {
                bad[i] = true;
                bad[i + w] = true;
            }
        }
    }
    if erosion <= 0.0 {
        return bad.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();
    }
    let dist = distance_transform(&bad, w, h);
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            let border = x.min(y).min(w as f64 - x).min(h as f64 - y);
            (dist[i].min(border) / erosion).min(1.0) as f32
        })
        .collect()
}

/// One view prepared for gathering: packed 5-channel samples plus falloff.
struct PreparedView<'a> {
    proj: Projector,
    depth: &'a DepthMap,
    /// basecolor RGB, roughness, metallic per pixel.
    samples: Vec<f32>,
    falloff: Vec<f32>,
    center_key: [f64; 3],
}

fn prepare<'a>(v: &'a SvbrdfView, weights: &BlendWeights) -> Result<PreparedView<'a>, GeometryError> {
    let n = v.camera.width * v.camera.height;
    let mut samples = Vec::with_capacity(5 * n);
    let (b, r, m) = (v.basecolor.data(), v.roughness.data(), v.metallic.data());
    for i in 0..n {
        samples.extend_from_slice(&b[3 * i..3 * i + 3]);
        samples.push(r[i]);
        samples.push(m[i]);
    }
    let c = v.camera.center();
    Ok(PreparedView {
        proj: v.camera.projector()?,
        depth: &v.depth,
        samples,
        falloff: view_falloff(&v.depth, weights.border_erosion),
        center_key: [c.x, c.y, c.z],
    })
}

#[derive(Clone, Copy)]
struct Observation {
    cos: f64,
    weight: f64,
    center: [f64; 3],
    values: [f64; 5],
}

/// Fixed total order: most frontal first, then camera center, then values.
fn observation_order(a: &Observation, b: &Observation) -> Ordering {
    b.cos
        .total_cmp(&a.cos)
        .then_with(|| {
            a.center
                .iter()
                .zip(&b.center)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| b.weight.total_cmp(&a.weight))
        .then_with(|| {
            a.values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

fn observe(
    view: &PreparedView<'_>,
    p: &nalgebra::Point3<f64>,
    n: &nalgebra::Vector3<f64>,
    weights: &BlendWeights,
) -> Option<Observation> {
    let to_cam = view.proj.center() - p;
    let cos = n.dot(&to_cam) / to_cam.norm();
    if !(cos > 0.0) {
        return None;
    }
    let (u, v, d) = view.proj.project(p)?;
    if !view.proj.in_bounds(u, v) {
        return None;
    }
    let mut values = [0.0f64; 5];
    let mut falloff = 0.0;
    let mut wsum = 0.0;
    for (i, tw) in bilinear_taps(u, v, view.proj.width, view.proj.height) {
        if tw <= 0.0 {
            continue;
        }
        let sd = view.depth.data[i] as f64;
        if !sd.is_finite() || (d - sd).abs() > weights.depth_eps_rel * sd {
            continue;
        }
        wsum += tw;
        falloff += tw * view.falloff[i] as f64;
        for (acc, &s) in values.iter_mut().zip(&view.samples[5 * i..5 * i + 5]) {
            *acc += tw * s as f64;
        }
    }
    if wsum <= 0.0 {
        return None;
    }
    for v in &mut values {
        *v /= wsum;
    }
    let weight = cos.powf(weights.angle_exponent) * (falloff / wsum);
    (weight > 0.0).then_some(Observation { cos, weight, center: view.center_key, values })
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Marks observations whose `q` channels stray more than 3 MAD from the median.
fn outlier_mask(obs: &[Observation], q: Quantity, keep: &mut [bool]) {
    keep.iter_mut().for_each(|k| *k = true);
    if obs.len() < 3 {
        return;
    }
    let mut scratch: Vec<f64> = Vec::with_capacity(obs.len());
    for c in q.offset()..q.offset() + q.channels() {
        scratch.clear();
        scratch.extend(obs.iter().map(|o| o.values[c]));
        let med = median(&mut scratch);
        scratch.iter_mut().for_each(|v| *v = (*v - med).abs());
        let mad = median(&mut scratch);
        if mad <= 0.0 {
            continue;
        }
        for (k, o) in keep.iter_mut().zip(obs) {
            if (o.values[c] - med).abs() > 3.0 * mad {
                *k = false;
            }
        }
    }
}

/// Merges every view into a `resolution²` atlas.
pub fn bake_atlas(
    mesh: &TriangleMesh,
    views: &SvbrdfViewSet,
    weights: &BlendWeights,
    resolution: usize,
) -> Result<TextureAtlas, AtlasError> {
    bake_quantities(mesh, views, weights, resolution, &Quantity::ALL)
}

/// Like [`bake_atlas`] but only fills the listed quantities; the others stay zero.
///
/// Each texel's surface point is projected into every view; observations
/// that pass the depth test are sorted into a fixed order and blended with
/// their weights, so the result does not depend on view order.
pub fn bake_quantities(
    mesh: &TriangleMesh,
    views: &SvbrdfViewSet,
    weights: &BlendWeights,
    resolution: usize,
    quantities: &[Quantity],
) -> Result<TextureAtlas, AtlasError> {
    mesh.validate()?;
    views.validate()?;
    weights.validate()?;
    if resolution == 0 {
        return Err(AtlasError::InvalidParameter("atlas resolution must be positive".into()));
    }
    let prepared = views
        .views
        .par_iter()
        .map(|v| prepare(v, weights))
        .collect::<Result<Vec<_>, _>>()?;
    let surfaces = rasterize_uv(mesh, resolution);
    let r = resolution;
    let want = |q: Quantity| quantities.contains(&q);

    struct Row {
        base: Vec<f32>,
        rough: Vec<f32>,
        metal: Vec<f32>,
        wsum: Vec<f32>,
    }

    let rows: Vec<Row> = surfaces
        .par_chunks(r)
        .map(|row| {
            let mut out = Row {
                base: vec![0.0; 3 * r],
                rough: vec![0.0; r],
                metal: vec![0.0; r],
                wsum: vec![0.0; r],
            };
            let mut obs: Vec<Observation> = Vec::with_capacity(prepared.len());
            let mut keep: Vec<bool> = Vec::with_capacity(prepared.len());
            for (x, s) in row.iter().enumerate() {
                if s.is_empty() {
                    continue;
                }
                let (p, n, _) = mesh.interpolate(s.tri as usize, s.barycentrics());
                obs.clear();
                obs.extend(prepared.iter().filter_map(|v| observe(v, &p, &n, weights)));
                if obs.is_empty() {
                    continue;
                }
                obs.sort_unstable_by(observation_order);
                out.wsum[x] = obs.iter().map(|o| o.weight).sum::<f64>() as f32;
                keep.resize(obs.len(), true);
                for q in Quantity::ALL {
                    if !want(q) {
                        continue;
                    }
                    if weights.reject_outliers {
                        outlier_mask(&obs, q, &mut keep);
                    } else {
                        keep.iter_mut().for_each(|k| *k = true);
                    }
                    let mut acc = [0.0f64; 3];
                    let mut wt = 0.0;
                    for (o, _) in obs.iter().zip(&keep).filter(|(_, &k)| k) {
                        wt += o.weight;
                        for (c, a) in acc.iter_mut().enumerate().take(q.channels()) {
                            *a += o.weight * o.values[q.offset() + c];
                        }
                    }
                    match q {
                        Quantity::Basecolor => {
                            for c in 0..3 {
                                out.base[3 * x + c] = (acc[c] / wt) as f32;
                            }
                        }
                        Quantity::Roughness => out.rough[x] = (acc[0] / wt) as f32,
                        Quantity::Metallic => out.metal[x] = (acc[0] / wt) as f32,
                    }
                }
            }
            out
        })
        .collect();

    let mut atlas = TextureAtlas::empty(r, views.views[0].basecolor.colorspace());
    for (j, row) in rows.into_iter().enumerate() {
        atlas.basecolor.data_mut()[3 * j * r..3 * (j + 1) * r].copy_from_slice(&row.base);
        atlas.roughness.data_mut()[j * r..(j + 1) * r].copy_from_slice(&row.rough);
        atlas.metallic.data_mut()[j * r..(j + 1) * r].copy_from_slice(&row.metal);
        atlas.weight_sum[j * r..(j + 1) * r].copy_from_slice(&row.wsum);
    }
    for (o, &w) in atlas.observed.iter_mut().zip(&atlas.weight_sum) {
        *o = w > 0.0;
    }
    Ok(atlas)
}
