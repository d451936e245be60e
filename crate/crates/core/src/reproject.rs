//! Depth-based inverse warping between views.
//!
//! Every covered destination pixel is lifted to 3D with the destination
//! depth, projected into the source camera and looked up with a bilinear
//! gather. A bilinear tap only contributes if the source depth stored there
//! agrees with the projected depth up to a relative tolerance; pixels with no
//! agreeing tap are disocclusions.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Camera, DepthMap, GeometryError, Projector};
use crate::imaging::ImageF;

pub const DEFAULT_EPS_REL: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ReprojectError {
    #[error("resolution mismatch: {0}")]
    ResolutionMismatch(String),
    #[error("depth tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("at least one source view is required")]
    NoSources,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Warped image plus per-pixel masks in the destination view.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpResult {
    /// Warped samples; zero where not valid.
    pub image: ImageF,
    pub valid: Vec<bool>,
    /// Covered in the destination but not recoverable from any source.
    pub disoccluded: Vec<bool>,
}

impl WarpResult {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }
}

/// Source view for [`accumulate_views`].
#[derive(Clone, Copy, Debug)]
pub struct WarpSource<'a> {
    pub image: &'a ImageF,
    pub camera: &'a Camera,
    pub depth: &'a DepthMap,
}

fn check_depth(cam: &Camera, depth: &DepthMap, what: &str) -> Result<(), ReprojectError> {
    if depth.width != cam.width || depth.height != cam.height || depth.data.len() != cam.width * cam.height {
        return Err(ReprojectError::ResolutionMismatch(format!(
            "{what} depth is {}x{} but its camera is {}x{}",
            depth.width, depth.height, cam.width, cam.height
        )));
    }
    Ok(())
}

/// Bilinear taps around continuous pixel coordinate (u, v), clamped to the image.
#[inline]
pub(crate) fn bilinear_taps(u: f64, v: f64, w: usize, h: usize) -> [(usize, f64); 4] {
    let sx = u - 0.5;
    let sy = v - 0.5;
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = sx - x0;
    let fy = sy - y0;
    let cx = |x: f64| x.clamp(0.0, (w - 1) as f64) as usize;
    let cy = |y: f64| y.clamp(0.0, (h - 1) as f64) as usize;
    let (xa, xb, ya, yb) = (cx(x0), cx(x0 + 1.0), cy(y0), cy(y0 + 1.0));
    [
        (ya * w + xa, (1.0 - fx) * (1.0 - fy)),
        (ya * w + xb, fx * (1.0 - fy)),
        (yb * w + xa, (1.0 - fx) * fy),
        (yb * w + xb, fx * fy),
    ]
}

struct Gather<'a> {
    img: &'a ImageF,
    proj: Projector,
    depth: &'a DepthMap,
    eps: f64,
}

impl Gather<'_> {
    /// Writes the depth-consistent bilinear sample of world point `p` into
    /// `out`; returns false when no tap passes.
    #[inline]
    fn sample(&self, p: &Point3<f64>, out: &mut [f32]) -> bool {
        let Some((u, v, d)) = self.proj.project(p) else {
            return false;
        };
        if !self.proj.in_bounds(u, v) {
            return false;
        }
        let c = self.img.channels();
        let data = self.img.data();
        let mut acc = [0.0f64; 4];
        let mut wsum = 0.0;
        for (i, w) in bilinear_taps(u, v, self.proj.width, self.proj.height) {
            if w <= 0.0 {
                continue;
            }
            let sd = self.depth.data[i] as f64;
            if !sd.is_finite() || (d - sd).abs() > self.eps * sd {
                continue;
            }
            wsum += w;
            for (a, &s) in acc.iter_mut().zip(&data[i * c..i * c + c]) {
                *a += w * s as f64;
            }
        }
        if wsum <= 0.0 {
            return false;
        }
        for (o, a) in out.iter_mut().zip(acc) {
            *o = (a / wsum) as f32;
        }
        true
    }
}

/// Inverse-warps `src_img` (seen by `src_cam` with `src_depth`) into the
/// destination camera.
pub fn warp_view(
    src_img: &ImageF,
    src_cam: &Camera,
    src_depth: &DepthMap,
    dst_cam: &Camera,
    dst_depth: &DepthMap,
    eps_rel: f64,
) -> Result<WarpResult, ReprojectError> {
    accumulate_views(
        &[WarpSource { image: src_img, camera: src_cam, depth: src_depth }],
        dst_cam,
        dst_depth,
        eps_rel,
    )
}

/// Estimates a world-space surface normal per covered pixel from the depth map.
///
/// Uses forward or backward differences, preferring the neighbor whose depth
/// is closer; the result faces the camera.
fn depth_normals(proj: &Projector, depth: &DepthMap) -> Vec<Option<Vector3<f64>>> {
    let (w, h) = (depth.width, depth.height);
    let point = |x: usize, y: usize| proj.unproject(x as f64 + 0.5, y as f64 + 0.5, depth.get(x, y) as f64);
    let pick = |d0: f32, a: Option<f32>, b: Option<f32>| -> Option<bool> {
        let da = a.filter(|v| v.is_finite()).map(|v| (v - d0).abs());
        let db = b.filter(|v| v.is_finite()).map(|v| (v - d0).abs());
        match (da, db) {
            (Some(x), Some(y)) => Some(x <= y),
            (Some(_), None) => Some(true),
            (None, Some(_)) => Some(false),
            (None, None) => None,
        }
    };
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let d0 = depth.data[i];
            if !d0.is_finite() {
                return None;
            }
            let p = point(x, y);
            let right = (x + 1 < w).then(|| depth.get(x + 1, y));
            let left = (x > 0).then(|| depth.get(x - 1, y));
            let down = (y + 1 < h).then(|| depth.get(x, y + 1));
            let up = (y > 0).then(|| depth.get(x, y - 1));
            let tx = match pick(d0, right, left)? {
                true => point(x + 1, y) - p,
                false => p - point(x - 1, y),
            };
            let ty = match pick(d0, down, up)? {
                true => point(x, y + 1) - p,
                false => p - point(x, y - 1),
            };
            let n = tx.cross(&ty).try_normalize(1e-300)?;
            let to_cam = proj.center() - p;
            Some(if n.dot(&to_cam) < 0.0 { -n } else { n })
        })
        .collect()
}

/// Warps every source into the destination and keeps, per pixel, the valid
/// sample whose source camera sees the surface most frontally (ties go to
/// the earlier source).
///
/// With a single source this is exactly [`warp_view`]. Surface orientation is
/// estimated from the destination depth map.
pub fn accumulate_views(
    sources: &[WarpSource<'_>],
    dst_cam: &Camera,
    dst_depth: &DepthMap,
    eps_rel: f64,
) -> Result<WarpResult, ReprojectError> {
    if !(eps_rel > 0.0) {
        return Err(ReprojectError::InvalidTolerance(eps_rel));
    }
    let first = sources.first().ok_or(ReprojectError::NoSources)?;
    let channels = first.image.channels();
    let colorspace = first.image.colorspace();
    check_depth(dst_cam, dst_depth, "destination")?;
    let dst = dst_cam.projector()?;
    let mut gathers = Vec::with_capacity(sources.len());
    for (k, s) in sources.iter().enumerate() {
        check_depth(s.camera, s.depth, "source")?;
        if s.image.width() != s.camera.width || s.image.height() != s.camera.height {
            return Err(ReprojectError::ResolutionMismatch(format!(
                "source {k} image is {}x{} but its camera is {}x{}",
                s.image.width(),
                s.image.height(),
                s.camera.width,
                s.camera.height
            )));
        }
        if s.image.channels() != channels {
            return Err(ReprojectError::ResolutionMismatch(format!(
                "source {k} has {} channels, expected {channels}",
                s.image.channels()
            )));
        }
        gathers.push(Gather { img: s.image, proj: s.camera.projector()?, depth: s.depth, eps: eps_rel });
    }
    let normals = (gathers.len() > 1).then(|| depth_normals(&dst, dst_depth));

    let (w, h) = (dst_cam.width, dst_cam.height);
    let mut data = vec![0.0f32; w * h * channels];
    let mut valid = vec![false; w * h];
    let mut disoccluded = vec![false; w * h];
    data.par_chunks_mut(w * channels)
        .zip(valid.par_chunks_mut(w))
        .zip(disoccluded.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((row, vrow), drow))| {
            let mut tmp = [0.0f32; 4];
            for x in 0..w {
                let i = y * w + x;
                let d = dst_depth.data[i];
                if !d.is_finite() {
                    continue;
                }
                let p = dst.unproject(x as f64 + 0.5, y as f64 + 0.5, d as f64);
                let out = &mut row[x * channels..x * channels + channels];
                let mut best = f64::NEG_INFINITY;
                for g in &gathers {
                    let score = match &normals {
                        Some(ns) => {
                            let n = ns[i].unwrap_or_else(|| (dst.center() - p).normalize());
                            n.dot(&(g.proj.center() - p).normalize())
                        }
                        None => 0.0,
                    };
                    if vrow[x] && score <= best {
                        continue;
                    }
                    if g.sample(&p, &mut tmp[..channels]) {
                        out.copy_from_slice(&tmp[..channels]);
                        vrow[x] = true;
                        best = score;
                    }
                }
                drow[x] = !vrow[x];
            }
        });
    Ok(WarpResult {
        image: ImageF::new(w, h, channels, data, colorspace)
            .map_err(|e| ReprojectError::ResolutionMismatch(e.to_string()))?,
        valid,
        disoccluded,
    })
}

/// Fraction of covered destination pixels that are disoccluded.
pub fn hole_stats(w: &WarpResult) -> f64 {
    let holes = w.disoccluded.iter().filter(|&&d| d).count();
    let covered = holes + w.valid.iter().filter(|&&v| v).count();
    if covered == 0 {
        0.0
    } else {
        holes as f64 / covered as f64
    }
}
