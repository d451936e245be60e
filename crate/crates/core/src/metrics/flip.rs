//! LDR-FLIP error maps.
//!
//! Single-precision throughout so results track the reference implementation
//! bit-for-bit up to summation order.

use rayon::prelude::*;

use super::MetricsError;
use crate::imaging::{ColorSpace, ImageF};

pub const DEFAULT_PPD: f64 = 67.0;

use std::f32::consts::PI;
const QC: f32 = 0.7;
const PC: f32 = 0.4;
const PT: f32 = 0.95;
const GW: f32 = 0.082;
const QF: f32 = 0.5;

const A1: [f32; 3] = [1.0, 1.0, 34.1];
const B1: [f32; 3] = [0.0047, 0.0053, 0.04];
const A2_Z: f32 = 13.5;
const B2_Z: f32 = 0.025;

const ILLUMINANT: [f32; 3] = [0.950428545, 1.0, 1.088900371];
const INV_ILLUMINANT: [f32; 3] = [1.052156925, 1.0, 0.918357670];

type C3 = [f32; 3];

#[inline]
fn srgb_to_linear(c: f32) -> f32 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_xyz(c: C3) -> C3 {
    let a11 = 10135552.0f32 / 24577794.0;
    let a12 = 8788810.0f32 / 24577794.0;
    let a13 = 4435075.0f32 / 24577794.0;
    let a21 = 2613072.0f32 / 12288897.0;
    let a22 = 8788810.0f32 / 12288897.0;
    let a23 = 887015.0f32 / 12288897.0;
    let a31 = 1425312.0f32 / 73733382.0;
    let a32 = 8788810.0f32 / 73733382.0;
    let a33 = 70074185.0f32 / 73733382.0;
    [
        a11 * c[0] + a12 * c[1] + a13 * c[2],
        a21 * c[0] + a22 * c[1] + a23 * c[2],
        a31 * c[0] + a32 * c[1] + a33 * c[2],
    ]
}

#[inline]
fn xyz_to_linear(c: C3) -> C3 {
    [
        3.241003275 * c[0] + -1.537398934 * c[1] + -0.498615861 * c[2],
        -0.969224334 * c[0] + 1.875930071 * c[1] + 0.041554224 * c[2],
        0.055639423 * c[0] + -0.204011202 * c[1] + 1.057148933 * c[2],
    ]
}

#[inline]
fn xyz_to_ycxcz(c: C3) -> C3 {
    let x = c[0] * INV_ILLUMINANT[0];
    let y = c[1] * INV_ILLUMINANT[1];
    let z = c[2] * INV_ILLUMINANT[2];
    [116.0 * y - 16.0, 500.0 * (x - y), 200.0 * (y - z)]
}

#[inline]
fn ycxcz_to_xyz(c: C3) -> C3 {
    let y = (c[0] + 16.0) / 116.0;
    let cx = c[1] / 500.0;
    let cz = c[2] / 200.0;
    [(y + cx) * ILLUMINANT[0], y * ILLUMINANT[1], (y - cz) * ILLUMINANT[2]]
}

#[inline]
fn xyz_to_lab(c: C3) -> C3 {
    let delta = 6.0f32 / 29.0;
    let delta_sq = delta * delta;
    let delta_cube = delta * delta_sq;
    let factor = 1.0 / (3.0 * delta_sq);
    let term = 4.0f32 / 29.0;
    let f = |t: f32| if t > delta_cube { t.powf(1.0 / 3.0) } else { factor * t + term };
    let x = f(c[0] * INV_ILLUMINANT[0]);
    let y = f(c[1] * INV_ILLUMINANT[1]);
    let z = f(c[2] * INV_ILLUMINANT[2]);
    [116.0 * y - 16.0, 500.0 * (x - y), 200.0 * (y - z)]
}

#[inline]
fn hunt(lab: C3) -> C3 {
    [lab[0], 0.01 * lab[0] * lab[1], 0.01 * lab[0] * lab[2]]
}

#[inline]
fn hyab(a: C3, b: C3) -> f32 {
    (a[0] - b[0]).abs() + ((a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2])).sqrt()
}

fn max_distance() -> f32 {
    let green = hunt(xyz_to_lab(linear_to_xyz([0.0, 1.0, 0.0])));
    let blue = hunt(xyz_to_lab(linear_to_xyz([0.0, 0.0, 1.0])));
    hyab(green, blue).powf(QC)
}

fn gaussian(x2: f32, a: f32, b: f32) -> f32 {
    let pi_sq = PI * PI;
    a * (PI / b).sqrt() * (-pi_sq * x2 / b).exp()
}

fn gaussian_sqrt(x2: f32, a: f32, b: f32) -> f32 {
    let pi_sq = PI * PI;
    (a * (PI / b).sqrt()).sqrt() * (-pi_sq * x2 / b).exp()
}

fn spatial_radius(ppd: f32) -> usize {
    let pi_sq = PI * PI;
    let max_b = B1.iter().copied().chain([1e-5, 1e-5, B2_Z]).fold(0.0f32, f32::max);
    (3.0 * (max_b / (2.0 * pi_sq)).sqrt() * ppd).ceil() as usize
}

/// Separable CSF kernels: `(Y, Cx)` and the two halves of the `Cz` kernel.
fn spatial_filters(ppd: f32) -> (Vec<[f32; 2]>, Vec<[f32; 2]>) {
    let r = spatial_radius(ppd) as i64;
    let dx = 1.0 / ppd;
    let mut ycx = Vec::new();
    let mut cz = Vec::new();
    let (mut s_ycx, mut s_cz) = ([0.0f32; 2], [0.0f32; 2]);
    for i in -r..=r {
        let x = i as f32 * dx;
        let x2 = x * x;
        let a = [gaussian(x2, A1[0], B1[0]), gaussian(x2, A1[1], B1[1])];
        let b = [gaussian_sqrt(x2, A1[2], B1[2]), gaussian_sqrt(x2, A2_Z, B2_Z)];
        s_ycx[0] += a[0];
        s_ycx[1] += a[1];
        s_cz[0] += b[0];
        s_cz[1] += b[1];
        ycx.push(a);
        cz.push(b);
    }
    let n_ycx = [1.0 / s_ycx[0], 1.0 / s_ycx[1]];
    let n_cz = 1.0 / (s_cz[0] * s_cz[0] + s_cz[1] * s_cz[1]).sqrt();
    for a in &mut ycx {
        a[0] *= n_ycx[0];
        a[1] *= n_ycx[1];
    }
    for b in &mut cz {
        b[0] *= n_cz;
        b[1] *= n_cz;
    }
    (ycx, cz)
}

/// Edge/point detection kernels `(g, dg, ddg)`.
fn feature_filter(ppd: f32) -> Vec<C3> {
    let sd = 0.5 * GW * ppd;
    let r = (3.0 * sd).ceil() as i64;
    let mut k = Vec::new();
    let (mut g_sum, mut dg_pos, mut dg_neg, mut ddg_pos, mut ddg_neg) = (0.0f32, 0.0f32, 0.0f32, 0.0f32, 0.0f32);
    for i in -r..=r {
        let x = i as f32;
        let g = (-(x * x) / (2.0 * sd * sd)).exp();
        g_sum += g;
        let dg = -x * g;
        if dg > 0.0 {
            dg_pos += dg;
        } else {
            dg_neg -= dg;
        }
        let ddg = (x * x / (sd * sd) - 1.0) * g;
        if ddg > 0.0 {
            ddg_pos += ddg;
        } else {
            ddg_neg -= ddg;
        }
        k.push([g, dg, ddg]);
    }
    for p in &mut k {
        p[0] /= g_sum;
        p[1] /= if p[1] > 0.0 { dg_pos } else { dg_neg };
        p[2] /= if p[2] > 0.0 { ddg_pos } else { ddg_neg };
    }
    k
}

fn to_ycxcz(img: &ImageF) -> Vec<C3> {
    img.data()
        .chunks_exact(3)
        .map(|p| xyz_to_ycxcz(linear_to_xyz([srgb_to_linear(p[0]), srgb_to_linear(p[1]), srgb_to_linear(p[2])])))
        .collect()
}

/// Horizontal pass of a separable filter with clamped borders.
fn filter_rows<T: Copy + Send + Sync, const N: usize>(
    src: &[T],
    w: usize,
    r: usize,
    f: impl Fn(&mut [f32; N], usize, T) + Sync,
) -> Vec<[f32; N]> {
    let mut out = vec![[0.0f32; N]; src.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = [0.0f32; N];
            for k in 0..=2 * r {
                let xx = (x as i64 + k as i64 - r as i64).clamp(0, w as i64 - 1) as usize;
                f(&mut acc, k, src[y * w + xx]);
            }
            *o = acc;
        }
    });
    out
}

/// Per-pixel LDR-FLIP between two sRGB-encoded images at `ppd` pixels per degree.
///
/// Returns a single-channel map with values in [0, 1].
pub fn flip_error(reference: &ImageF, test: &ImageF, ppd: f64) -> Result<ImageF, MetricsError> {
    super::check_same(reference, test)?;
    if reference.channels() != 3 {
        return Err(MetricsError::Channels { expected: 3, actual: reference.channels() });
    }
    if !(ppd > 0.0 && ppd.is_finite()) {
        return Err(MetricsError::InvalidParameter(format!("ppd must be positive, got {ppd}")));
    }
    let ppd = ppd as f32;
    let (w, h) = (reference.width(), reference.height());
    let ref_ycc = to_ycxcz(reference);
    let test_ycc = to_ycxcz(test);

    let (ycx_k, cz_k) = spatial_filters(ppd);
    let sr = ycx_k.len() / 2;
    let cmax = max_distance();
    let pccmax = PC * cmax;

    // x pass: (Y, Cx, Cz1, Cz2) for reference then test.
    let pairs: Vec<(C3, C3)> = ref_ycc.iter().copied().zip(test_ycc.iter().copied()).collect();
    let tmp = filter_rows::<_, 8>(&pairs, w, sr, |acc, k, (a, b)| {
        let (wy, wz) = (ycx_k[k], cz_k[k]);
        acc[0] += wy[0] * a[0];
        acc[1] += wy[1] * a[1];
        acc[2] += wz[0] * a[2];
        acc[3] += wz[1] * a[2];
        acc[4] += wy[0] * b[0];
        acc[5] += wy[1] * b[1];
        acc[6] += wz[0] * b[2];
        acc[7] += wz[1] * b[2];
    });

    let mut cdiff = vec![0.0f32; w * h];
    cdiff.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = [0.0f32; 8];
            for k in 0..=2 * sr {
                let yy = (y as i64 + k as i64 - sr as i64).clamp(0, h as i64 - 1) as usize;
                let t = &tmp[yy * w + x];
                let (wy, wz) = (ycx_k[k], cz_k[k]);
                acc[0] += wy[0] * t[0];
                acc[1] += wy[1] * t[1];
                acc[2] += wz[0] * t[2];
                acc[3] += wz[1] * t[3];
                acc[4] += wy[0] * t[4];
                acc[5] += wy[1] * t[5];
                acc[6] += wz[0] * t[6];
                acc[7] += wz[1] * t[7];
            }
            let lab = |c: C3| {
                let rgb = xyz_to_linear(ycxcz_to_xyz(c)).map(|v| v.clamp(0.0, 1.0));
                hunt(xyz_to_lab(linear_to_xyz(rgb)))
            };
            let a = lab([acc[0], acc[1], acc[2] + acc[3]]);
            let b = lab([acc[4], acc[5], acc[6] + acc[7]]);
            let mut d = hyab(a, b).powf(QC);
            d = if d < pccmax { d * (PT / pccmax) } else { PT + ((d - pccmax) / (cmax - pccmax)) * (1.0 - PT) };
            *o = d;
        }
    });

    let fk = feature_filter(ppd);
    let fr = fk.len() / 2;
    let gray: Vec<(f32, f32)> = pairs
        .iter()
        .map(|(a, b)| (a[0] * (1.0 / 116.0) + 16.0 / 116.0, b[0] * (1.0 / 116.0) + 16.0 / 116.0))
        .collect();
    // x pass: (dx, ddx, g) for reference then test.
    let ftmp = filter_rows::<_, 6>(&gray, w, fr, |acc, k, (a, b)| {
        let f = fk[k];
        acc[0] += f[1] * a;
        acc[1] += f[2] * a;
        acc[2] += f[0] * a;
        acc[3] += f[1] * b;
        acc[4] += f[2] * b;
        acc[5] += f[0] * b;
    });

    let norm = 1.0 / 2.0f32.sqrt();
    let mut out = cdiff;
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = [0.0f32; 8];
            for k in 0..=2 * fr {
                let yy = (y as i64 + k as i64 - fr as i64).clamp(0, h as i64 - 1) as usize;
                let t = &ftmp[yy * w + x];
                let f = fk[k];
                acc[0] += f[0] * t[0];
                acc[1] += f[0] * t[1];
                acc[2] += f[1] * t[2];
                acc[3] += f[2] * t[2];
                acc[4] += f[0] * t[3];
                acc[5] += f[0] * t[4];
                acc[6] += f[1] * t[5];
                acc[7] += f[2] * t[5];
            }
            let edge_r = (acc[0] * acc[0] + acc[2] * acc[2]).sqrt();
            let edge_t = (acc[4] * acc[4] + acc[6] * acc[6]).sqrt();
            let point_r = (acc[1] * acc[1] + acc[3] * acc[3]).sqrt();
            let point_t = (acc[5] * acc[5] + acc[7] * acc[7]).sqrt();
            let fdiff = (norm * (edge_r - edge_t).abs().max((point_r - point_t).abs())).powf(QF);
            *o = o.powf(1.0 - fdiff);
        }
    });

    Ok(ImageF::new(w, h, 1, out, ColorSpace::Scalar)?)
}

/// Mean of [`flip_error`] over all pixels.
pub fn flip_mean(reference: &ImageF, test: &ImageF, ppd: f64) -> Result<f64, MetricsError> {
    let map = flip_error(reference, test, ppd)?;
    Ok(map.data().iter().map(|&v| v as f64).sum::<f64>() / map.pixel_count() as f64)
}
