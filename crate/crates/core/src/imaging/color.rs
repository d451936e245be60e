use super::{ColorSpace, ImageError, ImageF};

/// Linear sRGB (D65) to CIE XYZ, exact rational form.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [
        10135552.0 / 24577794.0,
        8788810.0 / 24577794.0,
        4435075.0 / 24577794.0,
    ],
    [
        2613072.0 / 12288897.0,
        8788810.0 / 12288897.0,
        887015.0 / 12288897.0,
    ],
    [
        1425312.0 / 73733382.0,
        8788810.0 / 73733382.0,
        70074185.0 / 73733382.0,
    ],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.241003232976358, -1.537398969488785, -0.498615881996363],
    [-0.969224252202516, 1.875929983695176, 0.041554226340085],
    [0.055639419851975, -0.204011206123910, 1.057148977187533],
];

/// XYZ of linear RGB white; the reference white for YCxCz.
fn white_point() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row.iter().sum())
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

#[inline]
pub fn srgb_to_linear_value(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
pub fn linear_to_srgb_value(v: f64) -> f64 {
    if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn expect_space(img: &ImageF, space: ColorSpace, name: &'static str) -> Result<(), ImageError> {
    if img.colorspace() != space {
        return Err(ImageError::WrongColorSpace {
            expected: name,
            actual: img.colorspace(),
        });
    }
    Ok(())
}

/// Applies the sRGB EOTF to every sample.
pub fn srgb_to_linear(img: &ImageF) -> Result<ImageF, ImageError> {
    expect_space(img, ColorSpace::SRGB, "SRGB")?;
    Ok(img.map(ColorSpace::LinearRGB, |v| srgb_to_linear_value(v as f64) as f32))
}

/// Inverse EOTF. Values are clamped to [0, 1] so the result is a valid SRGB image.
pub fn linear_to_srgb(img: &ImageF) -> Result<ImageF, ImageError> {
    expect_space(img, ColorSpace::LinearRGB, "LinearRGB")?;
    Ok(img.map(ColorSpace::SRGB, |v| {
        linear_to_srgb_value(v.clamp(0.0, 1.0) as f64).clamp(0.0, 1.0) as f32
    }))
}

/// sRGB-encoded pixel to (Y, Cx, Cz) with a D65 white.
pub fn srgb_to_ycxcz_pixel(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear_value);
    let xyz = mul3(&RGB_TO_XYZ, lin);
    let w = white_point();
    let (x, y, z) = (xyz[0] / w[0], xyz[1] / w[1], xyz[2] / w[2]);
    [116.0 * y - 16.0, 500.0 * (x - y), 200.0 * (y - z)]
}

/// Inverse of [`srgb_to_ycxcz_pixel`] (unclamped).
pub fn ycxcz_to_srgb_pixel(ycxcz: [f64; 3]) -> [f64; 3] {
    let w = white_point();
    let y = (ycxcz[0] + 16.0) / 116.0;
    let x = ycxcz[1] / 500.0 + y;
    let z = y - ycxcz[2] / 200.0;
    let lin = mul3(&XYZ_TO_RGB, [x * w[0], y * w[1], z * w[2]]);
    lin.map(linear_to_srgb_value)
}

pub fn srgb_to_ycxcz(img: &ImageF) -> Result<ImageF, ImageError> {
    expect_space(img, ColorSpace::SRGB, "SRGB")?;
    if img.channels() != 3 {
        return Err(ImageError::WrongChannels {
            expected: 3,
            actual: img.channels(),
        });
    }
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        let out = srgb_to_ycxcz_pixel([px[0] as f64, px[1] as f64, px[2] as f64]);
        data.extend(out.iter().map(|&v| v as f32));
    }
    ImageF::new(img.width(), img.height(), 3, data, ColorSpace::YCxCz)
}

/// Reinhard curve `e·x / (1 + e·x)` per channel followed by sRGB encoding.
pub fn tonemap_reinhard(img: &ImageF, exposure: f32) -> Result<ImageF, ImageError> {
    expect_space(img, ColorSpace::LinearRGB, "LinearRGB")?;
    if !(exposure > 0.0) || !exposure.is_finite() {
        return Err(ImageError::Exposure(exposure));
    }
    let e = exposure as f64;
    Ok(img.map(ColorSpace::SRGB, |v| {
        let x = (v as f64).max(0.0) * e;
        let mapped = if x.is_infinite() { 1.0 } else { x / (1.0 + x) };
        linear_to_srgb_value(mapped).clamp(0.0, 1.0) as f32
    }))
}
