use serde::{Deserialize, Serialize};

use super::{check_same, MetricsError};
use crate::imaging::{srgb_to_ycxcz_pixel, ImageF};

/// Term weights of the SVBRDF training objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha_b: f64,
    pub alpha_m: f64,
    pub alpha_r: f64,
    pub lambda_b: f64,
    pub lambda_r: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha_b: 1.0, alpha_m: 2.0, alpha_r: 0.5, lambda_b: 0.5, lambda_r: 0.5 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let all = [self.alpha_b, self.alpha_m, self.alpha_r, self.lambda_b, self.lambda_r];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(MetricsError::InvalidParameter(format!("loss weights must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// Basecolor (sRGB, 3 channels), roughness and metallic maps of one view.
#[derive(Clone, Copy, Debug)]
pub struct SvbrdfMaps<'a> {
    pub basecolor: &'a ImageF,
    pub roughness: &'a ImageF,
    pub metallic: &'a ImageF,
}

/// Unweighted loss terms plus the weighted total.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub basecolor_flip_l1: f64,
    pub basecolor_perceptual: f64,
    pub metallic_l1: f64,
    pub roughness_l1: f64,
    pub roughness_perceptual: f64,
    pub total: f64,
}

pub fn l1(a: &ImageF, b: &ImageF) -> Result<f64, MetricsError> {
    check_same(a, b)?;
    let n = a.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let s: f64 = a.data().iter().zip(b.data()).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum();
    Ok(s / n as f64)
}

/// Mean absolute difference in YCxCz with each channel divided by its
/// range over the sRGB gamut proxy (116, 500, 200), averaged over channels.
pub fn flip_l1(pred: &ImageF, gt: &ImageF) -> Result<f64, MetricsError> {
    check_same(pred, gt)?;
    if pred.channels() != 3 {
        return Err(MetricsError::Channels { expected: 3, actual: pred.channels() });
    }
    const RANGE: [f64; 3] = [116.0, 500.0, 200.0];
    let n = pred.pixel_count();
    if n == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (p, g) in pred.data().chunks_exact(3).zip(gt.data().chunks_exact(3)) {
        let a = srgb_to_ycxcz_pixel([p[0] as f64, p[1] as f64, p[2] as f64]);
        let b = srgb_to_ycxcz_pixel([g[0] as f64, g[1] as f64, g[2] as f64]);
        sum += (0..3).map(|k| (a[k] - b[k]).abs() / RANGE[k]).sum::<f64>() / 3.0;
    }
    Ok(sum / n as f64)
}

/// Weighted SVBRDF loss. `perceptual` stands in for a learned perceptual
/// distance; `None` makes it zero.
pub fn training_loss(
    pred: SvbrdfMaps<'_>,
    gt: SvbrdfMaps<'_>,
    w: &LossWeights,
    perceptual: Option<&dyn Fn(&ImageF, &ImageF) -> f64>,
) -> Result<LossBreakdown, MetricsError> {
    w.validate()?;
    check_same(pred.basecolor, gt.basecolor)?;
    check_same(pred.roughness, gt.roughness)?;
    check_same(pred.metallic, gt.metallic)?;
    let p = |a: &ImageF, b: &ImageF| perceptual.map_or(0.0, |f| f(a, b));
    let mut b = LossBreakdown {
        basecolor_flip_l1: flip_l1(pred.basecolor, gt.basecolor)?,
        basecolor_perceptual: p(pred.basecolor, gt.basecolor),
        metallic_l1: l1(pred.metallic, gt.metallic)?,
        roughness_l1: l1(pred.roughness, gt.roughness)?,
        roughness_perceptual: p(pred.roughness, gt.roughness),
        total: 0.0,
    };
    b.total = w.alpha_b * (b.basecolor_flip_l1 + w.lambda_b * b.basecolor_perceptual)
        + w.alpha_m * b.metallic_l1
        + w.alpha_r * (b.roughness_l1 + w.lambda_r * b.roughness_perceptual);
    Ok(b)
}
