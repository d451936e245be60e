//! Image-quality metrics, the FLIP-space training loss and the
//! warped-frame flicker metric.

mod flicker;
mod flip;
mod loss;

pub use flicker::{flicker_metric, FlickerReport};
pub use flip::{flip_error, flip_mean, DEFAULT_PPD};
pub use loss::{flip_l1, l1, training_loss, LossBreakdown, LossWeights, SvbrdfMaps};

use thiserror::Error;

use crate::imaging::{ImageError, ImageF};
use crate::reproject::ReprojectError;

/// Reported when MSE underflows; keeps PSNR finite.
pub const PSNR_CAP: f64 = 99.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("expected {expected} channels, got {actual}")]
    Channels { expected: usize, actual: usize },
    #[error("image {width}x{height} is smaller than the {window}x{window} window")]
    TooSmall { width: usize, height: usize, window: usize },
    #[error("predicted mean of channel {channel} is {mean}, too close to zero")]
    NearZeroMean { channel: usize, mean: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sequence error: {0}")]
    Sequence(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Reproject(#[from] ReprojectError),
}

pub(crate) fn check_same(a: &ImageF, b: &ImageF) -> Result<(), MetricsError> {
    if !a.same_shape(b) {
        return Err(MetricsError::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &ImageF, b: &ImageF) -> Result<f64, MetricsError> {
    check_same(a, b)?;
    let n = a.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let s: f64 = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum();
    Ok(s / n as f64)
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP`].
pub fn psnr(a: &ImageF, b: &ImageF, peak: f64) -> Result<f64, MetricsError> {
    if !(peak > 0.0) {
        return Err(MetricsError::InvalidParameter(format!("peak must be positive, got {peak}")));
    }
    let m = mse(a, b)?;
    if m < 1e-12 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (peak * peak / m).log10()).min(PSNR_CAP))
}

fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - r;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable "valid" convolution; output is `(w − 10) × (h − 10)`.
fn blur_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_channel(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let k = ssim_kernel();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let prod = |f: &dyn Fn(usize) -> f64| (0..a.len()).map(f).collect::<Vec<f64>>();
    let mu_a = blur_valid(a, w, h, &k);
    let mu_b = blur_valid(b, w, h, &k);
    let aa = blur_valid(&prod(&|i| a[i] * a[i]), w, h, &k);
    let bb = blur_valid(&prod(&|i| b[i] * b[i]), w, h, &k);
    let ab = blur_valid(&prod(&|i| a[i] * b[i]), w, h, &k);
    let n = mu_a.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    sum / n as f64
}

/// Mean structural similarity (11×11 Gaussian window, σ = 1.5, unit dynamic
/// range), averaged over channels.
pub fn ssim(a: &ImageF, b: &ImageF) -> Result<f64, MetricsError> {
    check_same(a, b)?;
    let (w, h, c) = (a.width(), a.height(), a.channels());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricsError::TooSmall { width: w, height: h, window: SSIM_WINDOW });
    }
    let mut total = 0.0;
    for ch in 0..c {
        let pa: Vec<f64> = a.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let pb: Vec<f64> = b.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        total += ssim_channel(&pa, &pb, w, h);
    }
    Ok(total / c as f64)
}

/// Rescales each channel of `pred` so its mean matches `gt`.
pub fn scale_invariant_normalize(pred: &ImageF, gt: &ImageF) -> Result<ImageF, MetricsError> {
    check_same(pred, gt)?;
    let pm = pred.channel_means();
    let gm = gt.channel_means();
    let mut scale = Vec::with_capacity(pm.len());
    for (c, (&p, &g)) in pm.iter().zip(&gm).enumerate() {
        if !(p.abs() > 1e-8) {
            return Err(MetricsError::NearZeroMean { channel: c, mean: p });
        }
        scale.push(g / p);
    }
    let c = pred.channels();
    let mut out = pred.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v = (*v as f64 * scale[i % c]) as f32;
    }
    Ok(out)
}

/// PSNR after [`scale_invariant_normalize`], unit peak.
pub fn si_psnr(pred: &ImageF, gt: &ImageF) -> Result<f64, MetricsError> {
    psnr(&scale_invariant_normalize(pred, gt)?, gt, 1.0)
}
