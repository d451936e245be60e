use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::Deserialize;
use texmerge::atlas::BlendWeights;
use texmerge::geometry::{load_mesh, orbit_cameras, ContourParams};
use texmerge::metrics::DEFAULT_PPD;
use texmerge::render::{PointLight, RenderOptions};
use texmerge::reproject::DEFAULT_EPS_REL;
use texmerge::{scenes, Camera, OrbitSpec, TriangleMesh};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BundledScene {
    Quad,
    TwoPlane,
    HalfOccluder,
    Room,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookAt {
    pub eye: [f64; 3],
    pub target: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub fov_y_deg: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum BaseCamera {
    LookAt(LookAt),
    Explicit(Camera),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub base: BaseCamera,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_step")]
    pub delta_lat: f64,
    #[serde(default = "default_step")]
    pub delta_lon: f64,
    /// Defaults to the mesh bounding-box center.
    pub pivot: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// View directory holding reference maps in the same layout as the predictions.
    pub reference_dir: Option<PathBuf>,
    pub psnr: bool,
    pub ssim: bool,
    pub flip: bool,
    pub si_psnr: bool,
    pub flicker: bool,
    pub ppd: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            reference_dir: None,
            psnr: true,
            ssim: true,
            flip: true,
            si_psnr: true,
            flicker: true,
            ppd: DEFAULT_PPD,
        }
    }
}

/// On-disk pipeline description. Relative paths resolve against the config file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: Option<BundledScene>,
    pub mesh: Option<PathBuf>,
    /// JSON array of cameras.
    pub cameras: Option<PathBuf>,
    pub orbit: Option<OrbitConfig>,
    pub views_dir: Option<PathBuf>,
    #[serde(default = "default_atlas_res")]
    pub atlas_res: usize,
    #[serde(default)]
    pub blend: BlendWeights,
    #[serde(default)]
    pub contour: ContourParams,
    #[serde(default = "default_eps")]
    pub eps_rel: f64,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub lights: Vec<PointLight>,
    #[serde(default)]
    pub render: RenderOptions,
    #[serde(default = "default_exposure")]
    pub exposure: f32,
    /// Atlas bundle for `render`; defaults to the output of `bake`.
    pub atlas: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}
fn default_count() -> usize {
    5
}
fn default_step() -> f64 {
    25.0
}
fn default_atlas_res() -> usize {
    2048
}
fn default_eps() -> f64 {
    DEFAULT_EPS_REL
}
fn default_exposure() -> f32 {
    1.0
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub atlas_res: Option<usize>,
    pub eps_rel: Option<f64>,
}

/// Validated configuration with geometry loaded.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub mesh: TriangleMesh,
    pub cameras: Vec<Camera>,
    pub views_dir: PathBuf,
    pub out: PathBuf,
    pub atlas_res: usize,
    pub blend: BlendWeights,
    pub contour: ContourParams,
    pub eps_rel: f64,
    pub metrics: MetricsConfig,
    pub lights: Vec<PointLight>,
    pub render: RenderOptions,
    pub exposure: f32,
    pub atlas: PathBuf,
}

impl Pipeline {
    pub fn gbuffer_dir(&self, view: usize) -> PathBuf {
        self.out.join("gbuffer").join(view_name(view))
    }

    pub fn view_dir(&self, view: usize) -> PathBuf {
        self.views_dir.join(view_name(view))
    }
}

pub fn view_name(i: usize) -> String {
    format!("view_{i:03}")
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn existing(base: &Path, field: &str, p: &Path) -> Result<PathBuf, CliError> {
    let full = base.join(p);
    if full.exists() {
        Ok(full)
    } else {
        Err(invalid(field, format!("file not found: {}", full.display())))
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<PipelineConfig, CliError> {
    serde_json::from_str(text).map_err(|e| {
        CliError::Validation(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
    })
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

fn bundled(scene: BundledScene) -> (TriangleMesh, Vec<Camera>) {
    let res = 512;
    match scene {
        BundledScene::Quad => (scenes::unit_quad(), vec![scenes::unit_quad_camera(res, 2.0)]),
        BundledScene::TwoPlane => {
            let (a, b) = scenes::two_plane_cameras(res);
            (scenes::two_plane(), vec![a, b])
        }
        BundledScene::HalfOccluder => {
            let (a, b) = scenes::half_occluder_cameras(res);
            (scenes::half_occluder(), vec![a, b])
        }
        BundledScene::Room => {
            let mesh = scenes::furnished_room();
            let spec = OrbitSpec::around_mesh(scenes::room_camera(res), &mesh).expect("room has vertices");
            let cams = orbit_cameras(&spec).expect("room orbit");
            (mesh, cams)
        }
    }
}

impl PipelineConfig {
    /// Checks every field and loads the geometry; `base` anchors relative paths.
    pub fn resolve(self, base: &Path, ov: &Overrides) -> Result<Pipeline, CliError> {
        let (mesh, default_cams) = match (&self.scene, &self.mesh) {
            (Some(_), Some(_)) => return Err(invalid("mesh", "set either 'scene' or 'mesh', not both")),
            (None, None) => return Err(invalid("mesh", "missing; set 'mesh' to an OBJ file or 'scene' to a bundled scene")),
            (Some(s), None) => {
                let (m, c) = bundled(*s);
                (m, Some(c))
            }
            (None, Some(p)) => {
                let path = existing(base, "mesh", p)?;
                (load_mesh(&path).map_err(|e| invalid("mesh", e))?, None)
            }
        };
        mesh.validate().map_err(|e| invalid("mesh", e))?;

        let cameras = match (&self.cameras, &self.orbit) {
            (Some(_), Some(_)) => return Err(invalid("cameras", "set either 'cameras' or 'orbit', not both")),
            (Some(p), None) => {
                let path = existing(base, "cameras", p)?;
                let text = std::fs::read_to_string(&path).map_err(|e| invalid("cameras", e))?;
                serde_json::from_str::<Vec<Camera>>(&text).map_err(|e| {
                    invalid("cameras", format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
                })?
            }
            (None, Some(o)) => {
                let base_cam = match &o.base {
                    BaseCamera::Explicit(c) => c.clone(),
                    BaseCamera::LookAt(l) => Camera::look_at(
                        Point3::from(l.eye),
                        Point3::from(l.target),
                        Vector3::from(l.up),
                        l.fov_y_deg,
                        l.width,
                        l.height,
                    ),
                };
                let mut spec = OrbitSpec::around_mesh(base_cam, &mesh).map_err(|e| invalid("orbit", e))?;
                spec.count = o.count;
                spec.delta_lat = o.delta_lat;
                spec.delta_lon = o.delta_lon;
                if let Some(p) = o.pivot {
                    spec.pivot = Point3::from(p);
                }
                orbit_cameras(&spec).map_err(|e| invalid("orbit", e))?
            }
            (None, None) => default_cams.ok_or_else(|| invalid("cameras", "missing; set 'cameras' or 'orbit'"))?,
        };
        if cameras.is_empty() {
            return Err(invalid("cameras", "no cameras"));
        }
        for (i, c) in cameras.iter().enumerate() {
            c.validate().map_err(|e| invalid(&format!("cameras[{i}]"), e))?;
        }

        let atlas_res = ov.atlas_res.unwrap_or(self.atlas_res);
        if !atlas_res.is_power_of_two() || !(256..=8192).contains(&atlas_res) {
            return Err(invalid("atlas_res", format!("{atlas_res} is not a power of two in [256, 8192]")));
        }
        let eps_rel = ov.eps_rel.unwrap_or(self.eps_rel);
        if !(eps_rel > 0.0 && eps_rel.is_finite()) {
            return Err(invalid("eps_rel", format!("{eps_rel} must be positive")));
        }
        self.blend.validate().map_err(|e| invalid("blend", e))?;
        if !(self.contour.depth_rel_thresh > 0.0 && self.contour.normal_angle_thresh > 0.0) {
            return Err(invalid("contour", "thresholds must be positive"));
        }
        if !(self.metrics.ppd > 0.0) {
            return Err(invalid("metrics.ppd", format!("{} must be positive", self.metrics.ppd)));
        }
        for (i, l) in self.lights.iter().enumerate() {
            l.validate().map_err(|e| invalid(&format!("lights[{i}]"), e))?;
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            return Err(invalid("exposure", format!("{} must be positive", self.exposure)));
        }

        let out = ov.out.clone().or(self.out.map(|o| base.join(o))).unwrap_or_else(|| base.join("out"));
        let views_dir = self.views_dir.map(|v| base.join(v)).unwrap_or_else(|| out.join("views"));
        let atlas = self.atlas.map(|a| base.join(a)).unwrap_or_else(|| out.join("atlas").join("atlas.exr"));
        let metrics = MetricsConfig {
            reference_dir: self.metrics.reference_dir.as_ref().map(|r| base.join(r)),
            ..self.metrics
        };
        Ok(Pipeline {
            mesh,
            cameras,
            views_dir,
            out,
            atlas_res,
            blend: self.blend,
            contour: self.contour,
            eps_rel,
            metrics,
            lights: self.lights,
            render: self.render,
            exposure: self.exposure,
            atlas,
        })
    }
}
