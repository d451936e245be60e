//! Texel-space merging of per-view SVBRDF maps into one texture atlas.
//!
//! Atlas texel `(i, j)` covers `u ∈ [i/R, (i+1)/R]` and
//! `v ∈ [1 − (j+1)/R, 1 − j/R]`: row 0 is the top of the texture (v = 1),
//! matching how images are stored.

mod bake;
mod edt;
mod fill;
mod uv_raster;

pub use bake::{bake_atlas, bake_quantities, view_falloff, BlendWeights, Quantity};
pub use edt::distance_transform;
pub use fill::fill_holes;
pub use uv_raster::{rasterize_uv, TexelSurface};

use std::path::Path;

use thiserror::Error;

use crate::geometry::{Camera, DepthMap, GeometryError};
use crate::imaging::{load_bundle, save_bundle, save_image, save_mask_png, BundleChannel, ColorSpace, ImageError, ImageF};

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("at least one view is required")]
    NoViews,
    #[error("view {index}: {message}")]
    ViewMismatch { index: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("atlas has no observed texels to fill from")]
    Unobserved,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Material maps predicted for one camera.
#[derive(Clone, Debug)]
pub struct SvbrdfView {
    pub camera: Camera,
    /// 3 channels, sRGB-encoded or linear (tagged).
    pub basecolor: ImageF,
    pub roughness: ImageF,
    pub metallic: ImageF,
    pub depth: DepthMap,
}

#[derive(Clone, Debug, Default)]
pub struct SvbrdfViewSet {
    pub views: Vec<SvbrdfView>,
}

impl SvbrdfViewSet {
    pub fn validate(&self) -> Result<(), AtlasError> {
        let first = self.views.first().ok_or(AtlasError::NoViews)?;
        for (index, v) in self.views.iter().enumerate() {
            let bad = |message: String| AtlasError::ViewMismatch { index, message };
            v.camera.validate()?;
            let (w, h) = (v.camera.width, v.camera.height);
            for (name, img, ch) in [("basecolor", &v.basecolor, 3), ("roughness", &v.roughness, 1), ("metallic", &v.metallic, 1)] {
                if img.width() != w || img.height() != h {
                    return Err(bad(format!("{name} is {}x{}, camera is {w}x{h}", img.width(), img.height())));
                }
                if img.channels() != ch {
                    return Err(bad(format!("{name} has {} channels, expected {ch}", img.channels())));
                }
            }
            if v.depth.width != w || v.depth.height != h {
                return Err(bad(format!("depth is {}x{}, camera is {w}x{h}", v.depth.width, v.depth.height)));
            }
            if v.basecolor.colorspace() != first.basecolor.colorspace() {
                return Err(bad("basecolor colorspace differs from view 0".into()));
            }
        }
        Ok(())
    }
}

/// Merged material texture.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureAtlas {
    pub resolution: usize,
    pub basecolor: ImageF,
    pub roughness: ImageF,
    pub metallic: ImageF,
    /// Accumulated blend weight per texel.
    pub weight_sum: Vec<f32>,
    /// Texels that received at least one observation.
    pub observed: Vec<bool>,
    /// Set once unobserved texels hold defined values.
    pub filled: bool,
}

/// Bilinear atlas lookup result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtlasSample {
    pub basecolor: [f32; 3],
    pub roughness: f32,
    pub metallic: f32,
}

impl TextureAtlas {
    /// Empty atlas; basecolor carries `colorspace`.
    pub fn empty(resolution: usize, colorspace: ColorSpace) -> Self {
        Self {
            resolution,
            basecolor: ImageF::filled(resolution, resolution, 3, 0.0, colorspace),
            roughness: ImageF::filled(resolution, resolution, 1, 0.0, ColorSpace::Scalar),
            metallic: ImageF::filled(resolution, resolution, 1, 0.0, ColorSpace::Scalar),
            weight_sum: vec![0.0; resolution * resolution],
            observed: vec![false; resolution * resolution],
            filled: false,
        }
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Whether every texel holds a defined value.
    pub fn is_complete(&self) -> bool {
        self.filled || self.observed.iter().all(|&o| o)
    }

    pub fn quantity(&self, q: Quantity) -> &ImageF {
        match q {
            Quantity::Basecolor => &self.basecolor,
            Quantity::Roughness => &self.roughness,
            Quantity::Metallic => &self.metallic,
        }
    }

    pub(crate) fn quantity_mut(&mut self, q: Quantity) -> &mut ImageF {
        match q {
            Quantity::Basecolor => &mut self.basecolor,
            Quantity::Roughness => &mut self.roughness,
            Quantity::Metallic => &mut self.metallic,
        }
    }

    pub fn weight_image(&self) -> ImageF {
        let r = self.resolution;
        ImageF::new(r, r, 1, self.weight_sum.clone(), ColorSpace::Scalar).expect("sized")
    }

    /// Writes `basecolor.exr`, `roughness.exr`, `metallic.exr`, the combined
    /// `atlas.exr` bundle, `weight.exr` and `observed.png` into `dir`. A
    /// hole-filled atlas also stores a `filled` marker plane in the bundle.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), AtlasError> {
        let dir = dir.as_ref();
        save_image(&self.basecolor, dir.join("basecolor.exr"))?;
        save_image(&self.roughness, dir.join("roughness.exr"))?;
        save_image(&self.metallic, dir.join("metallic.exr"))?;
        let weight = self.weight_image();
        let observed = ImageF::new(
            self.resolution,
            self.resolution,
            1,
            self.observed.iter().map(|&o| o as u8 as f32).collect(),
            ColorSpace::Scalar,
        )
        .expect("sized");
        let marker = ImageF::filled(self.resolution, self.resolution, 1, 1.0, ColorSpace::Scalar);
        let mut channels = vec![
            BundleChannel { prefix: "basecolor", image: &self.basecolor },
            BundleChannel { prefix: "roughness", image: &self.roughness },
            BundleChannel { prefix: "metallic", image: &self.metallic },
            BundleChannel { prefix: "weight", image: &weight },
            BundleChannel { prefix: "observed", image: &observed },
        ];
        if self.filled {
            channels.push(BundleChannel { prefix: "filled", image: &marker });
        }
        save_bundle(dir.join("atlas.exr"), &channels)?;
        save_image(&weight, dir.join("weight.exr"))?;
        save_mask_png(&self.observed, self.resolution, self.resolution, dir.join("observed.png"))?;
        Ok(())
    }

    /// Reads an `atlas.exr` bundle written by [`TextureAtlas::save`].
    ///
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AtlasError> {
        let mut b = load_bundle(path)?;
        let mut take = |name: &str| {
            b.remove(name)
                .ok_or_else(|| AtlasError::InvalidParameter(format!("atlas bundle lacks '{name}' channels")))
        };
        let basecolor = take("basecolor")?;
        let roughness = take("roughness")?.with_colorspace(ColorSpace::Scalar)?;
        let metallic = take("metallic")?.with_colorspace(ColorSpace::Scalar)?;
        let weight = take("weight")?;
        let observed = take("observed")?;
        let filled_marker = take("filled").ok();
        let r = basecolor.width();
        if basecolor.height() != r || basecolor.channels() != 3 {
            return Err(AtlasError::InvalidParameter("atlas basecolor must be square RGB".into()));
        }
        for img in [&roughness, &metallic, &weight, &observed] {
            if img.width() != r || img.height() != r || img.channels() != 1 {
                return Err(AtlasError::InvalidParameter("atlas planes differ in size".into()));
            }
        }
        let observed: Vec<bool> = observed.data().iter().map(|&o| o > 0.5).collect();
        let filled = filled_marker.is_some();
        Ok(Self {
            resolution: r,
            basecolor,
            roughness,
            metallic,
            weight_sum: weight.into_data(),
            observed,
            filled,
        })
    }
}

/// Bilinear lookup of every quantity at `uv` with clamp-to-edge addressing.
pub fn sample_atlas(atlas: &TextureAtlas, uv: [f64; 2]) -> AtlasSample {
    let r = atlas.resolution;
    let u = uv[0].clamp(0.0, 1.0);
    let v = uv[1].clamp(0.0, 1.0);
    let x = u * r as f64 - 0.5;
    let y = (1.0 - v) * r as f64 - 0.5;
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let clamp = |t: f64| t.clamp(0.0, (r - 1) as f64) as usize;
    let (xa, xb, ya, yb) = (clamp(x0), clamp(x0 + 1.0), clamp(y0), clamp(y0 + 1.0));
    let taps = [
        (ya * r + xa, (1.0 - fx) * (1.0 - fy)),
        (ya * r + xb, fx * (1.0 - fy)),
        (yb * r + xa, (1.0 - fx) * fy),
        (yb * r + xb, fx * fy),
    ];
    let mut base = [0.0f64; 3];
    let mut rough = 0.0;
    let mut metal = 0.0;
    let (bd, rd, md) = (atlas.basecolor.data(), atlas.roughness.data(), atlas.metallic.data());
    for (i, w) in taps {
        for (c, b) in base.iter_mut().enumerate() {
            *b += w * bd[3 * i + c] as f64;
        }
        rough += w * rd[i] as f64;
        metal += w * md[i] as f64;
    }
    AtlasSample {
        basecolor: base.map(|b| b as f32),
        roughness: rough as f32,
        metallic: metal as f32,
    }
}
