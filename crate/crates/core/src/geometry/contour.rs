use serde::{Deserialize, Serialize};

use super::{GBuffer, GeometryError};
use crate::imaging::{ColorSpace, ImageF};

/// Thresholds for [`contour_map`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContourParams {
    /// Relative depth jump, `|d₁ − d₂| / min(d₁, d₂)`.
    pub depth_rel_thresh: f64,
    /// Normal crease angle in degrees.
    pub normal_angle_thresh: f64,
}

impl Default for ContourParams {
    fn default() -> Self {
        Self {
            depth_rel_thresh: 0.02,
            normal_angle_thresh: 20.0,
        }
    }
}

/// Binary contour image from depth jumps, normal creases and silhouettes.
///
/// Each discontinuous 4-neighbor pair marks exactly one of its pixels, which
/// keeps edges one pixel wide: the covered pixel for silhouettes, the nearer
/// pixel for depth jumps, and the top/left pixel for creases and depth ties.
pub fn contour_map(g: &GBuffer, params: ContourParams) -> Result<ImageF, GeometryError> {
    if !(params.depth_rel_thresh > 0.0) || !(params.normal_angle_thresh > 0.0) {
        return Err(GeometryError::InvalidParameter(format!(
            "contour thresholds must be positive (depth {}, angle {})",
            params.depth_rel_thresh, params.normal_angle_thresh
        )));
    }
    let n = g.width * g.height;
    if g.depth.len() != n || g.normal.len() != n || g.tri_id.len() != n || g.uv.len() != n {
        return Err(GeometryError::InvalidParameter("G-buffer planes do not match its size".into()));
    }
    let cos_thresh = params.normal_angle_thresh.to_radians().cos();
    let mut out = vec![0.0f32; n];

    let mut visit = |a: usize, b: usize| {
        let (ca, cb) = (g.covered(a), g.covered(b));
        let mark = match (ca, cb) {
            (false, false) => None,
            (true, false) => Some(a),
            (false, true) => Some(b),
            (true, true) => {
                let (da, db) = (g.depth[a] as f64, g.depth[b] as f64);
                if (da - db).abs() > params.depth_rel_thresh * da.min(db) {
                    Some(if db < da { b } else { a })
                } else {
                    let (na, nb) = (g.normal[a], g.normal[b]);
                    let dot = (na[0] * nb[0] + na[1] * nb[1] + na[2] * nb[2]) as f64;
                    (dot < cos_thresh).then_some(a)
                }
            }
        };
        if let Some(i) = mark {
            out[i] = 1.0;
        }
    };

    for y in 0..g.height {
        for x in 0..g.width {
            let i = y * g.width + x;
            if x + 1 < g.width {
                visit(i, i + 1);
            }
            if y + 1 < g.height {
                visit(i, i + g.width);
            }
        }
    }
    Ok(ImageF::new(g.width, g.height, 1, out, ColorSpace::Scalar).expect("sized above"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NO_TRIANGLE;

    fn synthetic(w: usize, h: usize, depth: impl Fn(usize, usize) -> f32) -> GBuffer {
        let mut g = GBuffer {
            width: w,
            height: h,
            depth: Vec::new(),
            normal: vec![[0.0, 0.0, 1.0]; w * h],
            uv: vec![[0.0; 2]; w * h],
            tri_id: Vec::new(),
        };
        for y in 0..h {
            for x in 0..w {
                let d = depth(x, y);
                g.depth.push(d);
                g.tri_id.push(if d.is_finite() { 0 } else { NO_TRIANGLE });
            }
        }
        g
    }

    #[test]
    fn flat_plane_has_no_contours() {
        let g = synthetic(16, 16, |_, _| 2.0);
        let c = contour_map(&g, ContourParams::default()).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_planes_give_one_pixel_band() {
        let g = synthetic(20, 10, |x, _| if x < 12 { 1.0 } else { 2.0 });
        let c = contour_map(&g, ContourParams::default()).unwrap();
        for y in 0..10 {
            for x in 0..20 {
                assert_eq!(c.get(x, y, 0), if x == 11 { 1.0 } else { 0.0 }, "({x},{y})");
            }
        }
    }

    #[test]
    fn silhouette_marks_covered_boundary() {
        let g = synthetic(12, 12, |x, y| {
            if (3..9).contains(&x) && (2..7).contains(&y) { 1.5 } else { f32::INFINITY }
        });
        let c = contour_map(&g, ContourParams::default()).unwrap();
        for y in 0..12 {
            for x in 0..12 {
                let inside = (3..9).contains(&x) && (2..7).contains(&y);
                let border = inside && (x == 3 || x == 8 || y == 2 || y == 6);
                assert_eq!(c.get(x, y, 0) == 1.0, border);
            }
        }
    }

    #[test]
    fn creases_follow_the_angle_threshold() {
        let mut g = synthetic(8, 4, |_, _| 1.0);
        let tilted = [0.0, (30f32).to_radians().sin(), (30f32).to_radians().cos()];
        for y in 0..4 {
            for x in 4..8 {
                g.normal[y * 8 + x] = tilted;
            }
        }
        let c = contour_map(&g, ContourParams::default()).unwrap();
        assert_eq!(c.data().iter().filter(|&&v| v == 1.0).count(), 4);
        let loose = ContourParams { normal_angle_thresh: 45.0, ..Default::default() };
        let c = contour_map(&g, loose).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_nonpositive_thresholds() {
        let g = synthetic(4, 4, |_, _| 1.0);
        let p = ContourParams { depth_rel_thresh: 0.0, ..Default::default() };
        assert!(contour_map(&g, p).is_err());
    }
}
