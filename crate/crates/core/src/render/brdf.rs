use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Smallest GGX α; keeps the distribution finite for roughness 0.
pub const MIN_ALPHA: f64 = 1e-3;

const DIELECTRIC_F0: f64 = 0.04;

/// Metallic-roughness material at one surface point; basecolor is linear RGB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrdfSample {
    pub basecolor: [f64; 3],
    pub roughness: f64,
    pub metallic: f64,
}

/// BRDF value split into its lobes, plus the Fresnel factor used by the
/// specular lobe.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BrdfEval {
    pub diffuse: [f64; 3],
    pub specular: [f64; 3],
    pub fresnel: [f64; 3],
}

impl BrdfEval {
    pub fn total(&self) -> [f64; 3] {
        [0, 1, 2].map(|c| self.diffuse[c] + self.specular[c])
    }
}

impl BrdfSample {
    pub fn clamped(&self) -> BrdfSample {
        BrdfSample {
            basecolor: self.basecolor.map(|c| c.clamp(0.0, 1.0)),
            roughness: self.roughness.clamp(0.0, 1.0),
            metallic: self.metallic.clamp(0.0, 1.0),
        }
    }

    pub fn f0(&self) -> [f64; 3] {
        self.basecolor.map(|c| DIELECTRIC_F0 * (1.0 - self.metallic) + c * self.metallic)
    }

    pub fn alpha(&self) -> f64 {
        (self.roughness * self.roughness).max(MIN_ALPHA)
    }
}

/// GGX normal distribution.
pub fn ggx_d(n_dot_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    a2 / (std::f64::consts::PI * d * d)
}

/// Height-correlated Smith visibility `G / (4 (n·l)(n·v))`.
pub fn smith_visibility(n_dot_v: f64, n_dot_l: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let gv = n_dot_l * (n_dot_v * n_dot_v * (1.0 - a2) + a2).sqrt();
    let gl = n_dot_v * (n_dot_l * n_dot_l * (1.0 - a2) + a2).sqrt();
    0.5 / (gv + gl)
}

pub fn fresnel_schlick(f0: [f64; 3], v_dot_h: f64) -> [f64; 3] {
    let k = (1.0 - v_dot_h).clamp(0.0, 1.0).powi(5);
    f0.map(|f| f + (1.0 - f) * k)
}

/// Evaluates both lobes; zero when `v` or `l` is below the horizon of `n`.
pub fn eval_brdf(s: &BrdfSample, n: &Vector3<f64>, v: &Vector3<f64>, l: &Vector3<f64>) -> BrdfEval {
    let n_dot_v = n.dot(v);
    let n_dot_l = n.dot(l);
    if n_dot_v <= 0.0 || n_dot_l <= 0.0 {
        return BrdfEval::default();
    }
    let s = s.clamped();
    let Some(h) = (v + l).try_normalize(1e-12) else {
        return BrdfEval::default();
    };
    let n_dot_h = n.dot(&h).clamp(0.0, 1.0);
    let v_dot_h = v.dot(&h).clamp(0.0, 1.0);
    let alpha = s.alpha();
    let fresnel = fresnel_schlick(s.f0(), v_dot_h);
    let dv = ggx_d(n_dot_h, alpha) * smith_visibility(n_dot_v.min(1.0), n_dot_l.min(1.0), alpha);
    BrdfEval {
        diffuse: s.basecolor.map(|c| (1.0 - s.metallic) * c / std::f64::consts::PI),
        specular: fresnel.map(|f| f * dv),
        fresnel,
    }
}

/// Metallic-roughness GGX BRDF value for unit vectors `n`, `v`, `l`.
pub fn shade_brdf(s: &BrdfSample, n: &Vector3<f64>, v: &Vector3<f64>, l: &Vector3<f64>) -> [f64; 3] {
    eval_brdf(s, n, v, l).total()
}
