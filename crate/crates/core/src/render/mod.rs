//! Direct-lighting relighting of a merged atlas under point lights.

mod brdf;

pub use brdf::{eval_brdf, fresnel_schlick, ggx_d, shade_brdf, smith_visibility, BrdfEval, BrdfSample, MIN_ALPHA};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{sample_atlas, TextureAtlas};
use crate::geometry::{rasterize_gbuffer, Bvh, Camera, GeometryError, TriangleMesh};
use crate::imaging::{srgb_to_linear_value, ColorSpace, ImageF};

/// Isotropic point light; `intensity` is radiant intensity per channel (W/sr).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointLight {
    pub position: [f64; 3],
    pub intensity: [f64; 3],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Components {
    #[default]
    All,
    Diffuse,
    Specular,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub shadows: bool,
    pub components: Components,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { shadows: true, components: Components::All }
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("atlas has unobserved texels; fill holes before rendering")]
    UnfilledAtlas,
    #[error("invalid light {index}: {message}")]
    InvalidLight { index: usize, message: String },
    #[error("atlas basecolor must be SRGB or LinearRGB, got {0:?}")]
    AtlasColorSpace(ColorSpace),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl PointLight {
    pub fn validate(&self) -> Result<(), String> {
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite position {:?}", self.position));
        }
        if self.intensity.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(format!("intensity must be finite and non-negative, got {:?}", self.intensity));
        }
        Ok(())
    }
}

/// Relative distance kept free at both ends of a shadow ray.
const SHADOW_EPS: f64 = 1e-6;

/// Intersection of the ray `o + t·d` with the plane of triangle `t`, and the
/// barycentrics of that point.
fn surface_point(mesh: &TriangleMesh, t: usize, o: &Point3<f64>, d: &Vector3<f64>) -> Option<(Point3<f64>, [f64; 3])> {
    let [a, b, c] = mesh.triangle_positions(t);
    let n = (b - a).cross(&(c - a));
    let denom = n.dot(d);
    if denom == 0.0 {
        return None;
    }
    let s = n.dot(&(a - o)) / denom;
    let p = o + d * s;
    let n2 = n.norm_squared();
    let b1 = (p - a).cross(&(c - a)).dot(&n) / n2;
    let b2 = (b - a).cross(&(p - a)).dot(&n) / n2;
    Some((p, [1.0 - b1 - b2, b1, b2]))
}

/// Renders `cam`'s view of `mesh` textured with `atlas` under `lights`
/// with shadows and both lobes.
pub fn render_view(
    mesh: &TriangleMesh,
    atlas: &TextureAtlas,
    cam: &Camera,
    lights: &[PointLight],
) -> Result<ImageF, RenderError> {
    render_view_with(mesh, atlas, cam, lights, &RenderOptions::default())
}

/// Linear HDR render: every covered pixel sums `f·(n·l)·I/d²` over the
/// lights that are visible from the surface point. Background stays zero.
pub fn render_view_with(
    mesh: &TriangleMesh,
    atlas: &TextureAtlas,
    cam: &Camera,
    lights: &[PointLight],
    opts: &RenderOptions,
) -> Result<ImageF, RenderError> {
    if !atlas.is_complete() {
        return Err(RenderError::UnfilledAtlas);
    }
    let srgb = match atlas.basecolor.colorspace() {
        ColorSpace::SRGB => true,
        ColorSpace::LinearRGB => false,
        other => return Err(RenderError::AtlasColorSpace(other)),
    };
    for (index, l) in lights.iter().enumerate() {
        l.validate().map_err(|message| RenderError::InvalidLight { index, message })?;
    }
    let (w, h) = (cam.width, cam.height);
    let mut data = vec![0.0f32; w * h * 3];
    if lights.is_empty() {
        return Ok(ImageF::new(w, h, 3, data, ColorSpace::LinearRGB).expect("sized"));
    }
    let gb = rasterize_gbuffer(mesh, cam)?;
    let proj = cam.projector()?;
    let bvh = opts.shadows.then(|| Bvh::build(mesh));
    let eye = proj.center();

    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, row)| {
        for x in 0..w {
            let i = y * w + x;
            if !gb.covered(i) {
                continue;
            }
            let t = gb.tri_id[i] as usize;
            let dir = proj.ray_direction(x as f64 + 0.5, y as f64 + 0.5);
            let Some((p, bary)) = surface_point(mesh, t, &eye, &dir) else {
                continue;
            };
            let (_, n_interp, uv) = mesh.interpolate(t, bary);
            let v = -dir;
            let n = if n_interp.dot(&v) < 0.0 { -n_interp } else { n_interp };
            let mut face = mesh.face_normal(t);
            if face.dot(&v) < 0.0 {
                face = -face;
            }
            let a = sample_atlas(atlas, [uv.x, uv.y]);
            let base = a.basecolor.map(|c| if srgb { srgb_to_linear_value(c as f64) } else { c as f64 });
            let s = BrdfSample { basecolor: base, roughness: a.roughness as f64, metallic: a.metallic as f64 };
            let scale = p.coords.norm().max(1.0);
            let mut acc = [0.0f64; 3];
            for light in lights {
                let lp = Point3::from(light.position);
                let to_light = lp - p;
                let d2 = to_light.norm_squared();
                if d2 == 0.0 {
                    continue;
                }
                let dist = d2.sqrt();
                let l = to_light / dist;
                let n_dot_l = n.dot(&l);
                if n_dot_l <= 0.0 || face.dot(&l) <= 0.0 {
                    continue;
                }
                if let Some(bvh) = &bvh {
                    let origin = p + face * (SHADOW_EPS * scale);
                    if bvh.occluded(&origin, &l, SHADOW_EPS * scale, dist * (1.0 - SHADOW_EPS)) {
                        continue;
                    }
                }
                let e = eval_brdf(&s, &n, &v, &l);
                let f = match opts.components {
                    Components::All => e.total(),
                    Components::Diffuse => e.diffuse,
                    Components::Specular => e.specular,
                };
                for c in 0..3 {
                    acc[c] += f[c] * n_dot_l * light.intensity[c] / d2;
                }
            }
            for c in 0..3 {
                row[3 * x + c] = acc[c] as f32;
            }
        }
    });
    Ok(ImageF::new(w, h, 3, data, ColorSpace::LinearRGB).expect("sized"))
}
