use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use exr::prelude::{
    AnyChannel, AnyChannels, AttributeValue, Encoding, FlatSamples, Image, Layer, LayerAttributes,
    ReadChannels, ReadLayers, SmallVec, Text, WritableImage,
};

use super::{color::linear_to_srgb_value, ColorSpace, ImageError, ImageF};

/// One named image inside a multi-map EXR bundle, e.g. `basecolor` or `depth`.
#[derive(Clone, Debug)]
pub struct BundleChannel<'a> {
    pub prefix: &'a str,
    pub image: &'a ImageF,
}

enum Format {
    Exr,
    Png,
}

fn format_of(path: &Path) -> Result<Format, ImageError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("exr") => Ok(Format::Exr),
        Some("png") => Ok(Format::Png),
        _ => Err(ImageError::UnsupportedFormat(path.display().to_string())),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ImageError {
    ImageError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn corrupt(path: &Path, reason: impl ToString) -> ImageError {
    ImageError::CorruptHeader {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Loads an OpenEXR (32-bit float, tagged LinearRGB or Scalar) or 8/16-bit PNG
/// (tagged SRGB) image.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageF, ImageError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(ImageError::NotFound(path.display().to_string()));
    }
    match format_of(path)? {
        Format::Png => load_png(path),
        Format::Exr => load_exr(path),
    }
}

/// Writes `img` as EXR (lossless f32) or PNG (8-bit).
///
/// PNG output stores SRGB and Scalar samples as-is; LinearRGB samples are
/// sRGB-encoded first. Samples outside [0, 1] are a range error.
pub fn save_image(img: &ImageF, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    match format_of(path)? {
        Format::Png => save_png(img, path),
        Format::Exr => save_bundle(
            path,
            &[BundleChannel {
                prefix: "",
                image: img,
            }],
        ),
    }
}

/// Writes a binary mask as an 8-bit grayscale PNG with 255 where `mask` is set.
pub fn save_mask_png(
    mask: &[bool],
    width: usize,
    height: usize,
    path: impl AsRef<Path>,
) -> Result<(), ImageError> {
    assert_eq!(mask.len(), width * height, "mask size mismatch");
    let bytes: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_png_bytes(path.as_ref(), width, height, png::ColorType::Grayscale, &bytes)
}

fn load_png(path: &Path) -> Result<ImageF, ImageError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| corrupt(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| corrupt(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| corrupt(path, e))?;
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        png::ColorType::Indexed => return Err(corrupt(path, "unexpanded palette")),
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let n = w * h * channels;
    let data: Vec<f32> = match info.bit_depth {
        png::BitDepth::Sixteen => buf[..n * 2]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as f32 / 65535.0)
            .collect(),
        png::BitDepth::Eight => buf[..n].iter().map(|&b| b as f32 / 255.0).collect(),
        other => return Err(corrupt(path, format!("unexpected bit depth {other:?}"))),
    };
    ImageF::new(w, h, channels, data, ColorSpace::SRGB)
}

fn save_png(img: &ImageF, path: &Path) -> Result<(), ImageError> {
    let encode_linear = img.colorspace() == ColorSpace::LinearRGB;
    if img.colorspace() == ColorSpace::YCxCz {
        return Err(ImageError::WrongColorSpace {
            expected: "SRGB, LinearRGB or Scalar",
            actual: img.colorspace(),
        });
    }
    let mut bytes = Vec::with_capacity(img.data().len());
    for &v in img.data() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ImageError::Range { value: v });
        }
        let v = if encode_linear {
            linear_to_srgb_value(v as f64).clamp(0.0, 1.0) as f32
        } else {
            v
        };
        bytes.push((v * 255.0).round() as u8);
    }
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        2 => png::ColorType::GrayscaleAlpha,
        3 => png::ColorType::Rgb,
        _ => png::ColorType::Rgba,
    };
    write_png_bytes(path, img.width(), img.height(), color, &bytes)
}

fn write_png_bytes(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    bytes: &[u8],
) -> Result<(), ImageError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| io_err(path, std::io::Error::other(e)))?;
    writer
        .write_image_data(bytes)
        .map_err(|e| io_err(path, std::io::Error::other(e)))?;
    writer
        .finish()
        .map_err(|e| io_err(path, std::io::Error::other(e)))
}

fn suffixes(prefix: &str, channels: usize) -> &'static [&'static str] {
    match (prefix, channels) {
        ("normal", 3) => &["X", "Y", "Z"],
        (_, 1) => &["Y"],
        (_, 2) => &["Y", "A"],
        (_, 3) => &["R", "G", "B"],
        _ => &["R", "G", "B", "A"],
    }
}

fn colorspace_name(cs: ColorSpace) -> &'static str {
    match cs {
        ColorSpace::LinearRGB => "LinearRGB",
        ColorSpace::SRGB => "SRGB",
        ColorSpace::YCxCz => "YCxCz",
        ColorSpace::Scalar => "Scalar",
    }
}

fn colorspace_from_name(name: &str) -> Option<ColorSpace> {
    Some(match name {
        "LinearRGB" => ColorSpace::LinearRGB,
        "SRGB" => ColorSpace::SRGB,
        "YCxCz" => ColorSpace::YCxCz,
        "Scalar" => ColorSpace::Scalar,
        _ => return None,
    })
}

/// Header attribute listing `prefix=colorspace` pairs, one per line. A single
/// attribute keeps the header byte-identical across runs.
const COLORSPACE_ATTR: &str = "texmerge.colorspaces";

/// Writes several images into one EXR, naming channels `<prefix>.<suffix>`
/// (`basecolor.R`, `roughness.Y`, `normal.X`, ...). An empty prefix writes
/// bare `R,G,B` / `Y` channels. All images must share one size.
pub fn save_bundle(path: impl AsRef<Path>, entries: &[BundleChannel<'_>]) -> Result<(), ImageError> {
    let path = path.as_ref();
    let first = entries
        .first()
        .ok_or_else(|| ImageError::Invalid("empty bundle".into()))?
        .image;
    let (w, h) = (first.width(), first.height());
    let mut channels: SmallVec<[AnyChannel<FlatSamples>; 4]> = SmallVec::new();
    let mut tags = String::new();
    for entry in entries {
        let img = entry.image;
        if img.width() != w || img.height() != h {
            return Err(ImageError::Invalid(format!(
                "bundle entry '{}' is {}x{}, expected {w}x{h}",
                entry.prefix,
                img.width(),
                img.height()
            )));
        }
        for (c, suffix) in suffixes(entry.prefix, img.channels()).iter().enumerate() {
            let name = if entry.prefix.is_empty() {
                suffix.to_string()
            } else {
                format!("{}.{suffix}", entry.prefix)
            };
            let samples: Vec<f32> = img
                .data()
                .iter()
                .skip(c)
                .step_by(img.channels())
                .copied()
                .collect();
            channels.push(AnyChannel::new(name.as_str(), FlatSamples::F32(samples)));
        }
        tags.push_str(&format!("{}={}\n", entry.prefix, colorspace_name(img.colorspace())));
    }
    let mut attributes = LayerAttributes::default();
    attributes
        .other
        .insert(Text::from(COLORSPACE_ATTR), AttributeValue::Text(Text::from(tags.as_str())));
    let layer = Layer::new(
        (w, h),
        attributes,
        Encoding::FAST_LOSSLESS,
        AnyChannels::sort(channels),
    );
    Image::from_layer(layer)
        .write()
        .to_file(path)
        .map_err(|e| io_err(path, std::io::Error::other(e)))
}

/// Reads every channel group of an EXR, keyed by prefix (empty for bare channels).
pub fn load_bundle(path: impl AsRef<Path>) -> Result<BTreeMap<String, ImageF>, ImageError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(ImageError::NotFound(path.display().to_string()));
    }
    if !matches!(format_of(path)?, Format::Exr) {
        return Err(ImageError::UnsupportedFormat(path.display().to_string()));
    }
    let image = exr::prelude::read()
        .no_deep_data()
        .largest_resolution_level()
        .all_channels()
        .first_valid_layer()
        .all_attributes()
        .from_file(path)
        .map_err(|e| match e {
            exr::error::Error::Io(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => {
                io_err(path, io)
            }
            other => corrupt(path, other),
        })?;
    let layer = image.layer_data;
    let (w, h) = (layer.size.width(), layer.size.height());

    let tags: BTreeMap<String, ColorSpace> = match layer.attributes.other.get(&Text::from(COLORSPACE_ATTR)) {
        Some(AttributeValue::Text(t)) => t
            .to_string()
            .lines()
            .filter_map(|l| {
                let (prefix, name) = l.split_once('=')?;
                Some((prefix.to_string(), colorspace_from_name(name)?))
            })
            .collect(),
        _ => BTreeMap::new(),
    };

    let mut groups: BTreeMap<String, Vec<(String, Vec<f32>)>> = BTreeMap::new();
    for channel in layer.channel_data.list {
        let full = channel.name.to_string();
        let (prefix, suffix) = match full.rfind('.') {
            Some(i) => (full[..i].to_string(), full[i + 1..].to_string()),
            None => (String::new(), full.clone()),
        };
        let samples: Vec<f32> = channel.sample_data.values_as_f32().collect();
        if samples.len() != w * h {
            return Err(corrupt(path, format!("channel {full} has wrong length")));
        }
        groups.entry(prefix).or_default().push((suffix, samples));
    }

    let mut out = BTreeMap::new();
    for (prefix, mut chans) in groups {
        let order = |s: &str| {
            ["R", "X", "G", "Y", "B", "Z", "A"]
                .iter()
                .position(|o| *o == s)
                .unwrap_or(usize::MAX)
        };
        // `Y` is luminance for single channels but the second axis of a normal.
        chans.sort_by_key(|(s, _)| order(s));
        if chans.len() > 4 {
            return Err(corrupt(path, format!("group '{prefix}' has >4 channels")));
        }
        let nc = chans.len();
        let mut data = vec![0.0f32; w * h * nc];
        for (c, (_, samples)) in chans.iter().enumerate() {
            for (p, &v) in samples.iter().enumerate() {
                data[p * nc + c] = v;
            }
        }
        let colorspace = tags.get(&prefix).copied().unwrap_or(if nc >= 3 {
            ColorSpace::LinearRGB
        } else {
            ColorSpace::Scalar
        });
        out.insert(prefix, ImageF::new(w, h, nc, data, colorspace)?);
    }
    Ok(out)
}

fn load_exr(path: &Path) -> Result<ImageF, ImageError> {
    let mut groups = load_bundle(path)?;
    if let Some(img) = groups.remove("") {
        return Ok(img);
    }
    match groups.len() {
        1 => Ok(groups.into_values().next().expect("one group")),
        0 => Err(corrupt(path, "no channels")),
        _ => Err(ImageError::Invalid(format!(
            "{} holds a multi-map bundle; use load_bundle",
            path.display()
        ))),
    }
}
