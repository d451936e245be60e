//! Float image container, color transforms and file I/O.
//!
//! Every image-valued quantity in the crate (generated views, material maps,
//! masks, depth) travels as an [`ImageF`]: row-major interleaved `f32`
//! samples plus a [`ColorSpace`] tag that the color transforms check.

mod color;
mod io;

pub use color::{
    linear_to_srgb, linear_to_srgb_value, srgb_to_linear, srgb_to_linear_value, srgb_to_ycxcz,
    srgb_to_ycxcz_pixel, tonemap_reinhard, ycxcz_to_srgb_pixel,
};
pub use io::{load_bundle, load_image, save_bundle, save_image, save_mask_png, BundleChannel};

use thiserror::Error;

/// Interpretation of the samples stored in an [`ImageF`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    LinearRGB,
    SRGB,
    YCxCz,
    /// Non-color data: material maps, masks, depth.
    Scalar,
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {0}")]
    NotFound(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt or truncated image header in {path}: {reason}")]
    CorruptHeader { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sample value {value} outside [0, 1] cannot be stored in an 8-bit file")]
    Range { value: f32 },
    #[error("expected {expected} colorspace, got {actual:?}")]
    WrongColorSpace {
        expected: &'static str,
        actual: ColorSpace,
    },
    #[error("expected {expected} channels, got {actual}")]
    WrongChannels { expected: usize, actual: usize },
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("exposure must be positive, got {0}")]
    Exposure(f32),
}

/// Row-major, channel-interleaved floating-point image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    colorspace: ColorSpace,
}

impl ImageF {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
        colorspace: ColorSpace,
    ) -> Result<Self, ImageError> {
        if !(1..=4).contains(&channels) {
            return Err(ImageError::Invalid(format!(
                "channel count {channels} not in 1..=4"
            )));
        }
        if data.len() != width * height * channels {
            return Err(ImageError::Invalid(format!(
                "{} samples for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if colorspace == ColorSpace::SRGB {
            if let Some(&v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(ImageError::Range { value: v });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            colorspace,
        })
    }

    /// Image with every sample set to `value`.
    pub fn filled(
        width: usize,
        height: usize,
        channels: usize,
        value: f32,
        colorspace: ColorSpace,
    ) -> Self {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
            colorspace,
        )
        .expect("constant image is well formed")
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        colorspace: ColorSpace,
        mut f: impl FnMut(usize, usize) -> [f32; 4],
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                data.extend_from_slice(&px[..channels]);
            }
        }
        Self {
            width,
            height,
            channels,
            data,
            colorspace,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_shape(&self, other: &ImageF) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Reinterprets the samples under a different tag without converting them.
    ///
    /// Fails only when retagging as SRGB data that lies outside [0, 1].
    pub fn with_colorspace(self, colorspace: ColorSpace) -> Result<Self, ImageError> {
        Self::new(
            self.width,
            self.height,
            self.channels,
            self.data,
            colorspace,
        )
    }

    /// Extracts one channel as a single-channel image with the given tag.
    pub fn channel(&self, c: usize, colorspace: ColorSpace) -> ImageF {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        ImageF {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
            colorspace,
        }
    }

    /// Concatenates the channels of same-sized images; the result takes the
    /// tag of the first image.
    pub fn stack(images: &[&ImageF]) -> Result<ImageF, ImageError> {
        let first = images
            .first()
            .ok_or_else(|| ImageError::Invalid("nothing to stack".into()))?;
        let channels: usize = images.iter().map(|i| i.channels).sum();
        if images
            .iter()
            .any(|i| i.width != first.width || i.height != first.height)
        {
            return Err(ImageError::Invalid("stacked images differ in size".into()));
        }
        let mut data = Vec::with_capacity(first.pixel_count() * channels);
        for p in 0..first.pixel_count() {
            for img in images {
                data.extend_from_slice(&img.data[p * img.channels..(p + 1) * img.channels]);
            }
        }
        ImageF::new(first.width, first.height, channels, data, first.colorspace)
    }

    /// Applies `f` to every sample, keeping shape; the result carries `colorspace`.
    pub fn map(&self, colorspace: ColorSpace, f: impl Fn(f32) -> f32) -> ImageF {
        ImageF {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
            colorspace,
        }
    }

    /// Per-channel arithmetic mean.
    pub fn channel_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.channels];
        for px in self.data.chunks_exact(self.channels) {
            for (s, &v) in sums.iter_mut().zip(px) {
                *s += v as f64;
            }
        }
        let n = self.pixel_count().max(1) as f64;
        sums.into_iter().map(|s| s / n).collect()
    }
}
