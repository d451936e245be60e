use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flip_error, MetricsError, DEFAULT_PPD};
use crate::geometry::{Camera, DepthMap};
use crate::reproject::warp_view;

/// Per-pair and summed FLIP between each frame warped into its successor
/// and the successor itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlickerReport {
    /// Mean FLIP over the pixels that the warp recovered.
    pub per_pair: Vec<f64>,
    pub total: f64,
    /// Fraction of destination pixels that the warp recovered.
    pub valid_fraction: Vec<f64>,
}

impl FlickerReport {
    /// Total divided by the number of pairs.
    pub fn mean(&self) -> f64 {
        if self.per_pair.is_empty() {
            0.0
        } else {
            self.total / self.per_pair.len() as f64
        }
    }
}

/// Temporal consistency of an image sequence with known geometry.
///
/// Frame `i` is warped into camera `i + 1`. Pixels the warp cannot recover
/// take the target's own value before FLIP is evaluated, so they contribute
/// nothing, and the mean runs over recovered pixels only.
pub fn flicker_metric(
    frames: &[crate::imaging::ImageF],
    cams: &[Camera],
    depths: &[DepthMap],
    eps_rel: f64,
) -> Result<FlickerReport, MetricsError> {
    if frames.len() < 2 {
        return Err(MetricsError::Sequence(format!("need at least 2 frames, got {}", frames.len())));
    }
    if cams.len() != frames.len() || depths.len() != frames.len() {
        return Err(MetricsError::Sequence(format!(
            "{} frames, {} cameras, {} depth maps",
            frames.len(),
            cams.len(),
            depths.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = (0..frames.len() - 1)
        .into_par_iter()
        .map(|i| {
            let dst = &frames[i + 1];
            let warp = warp_view(&frames[i], &cams[i], &depths[i], &cams[i + 1], &depths[i + 1], eps_rel)?;
            super::check_same(&warp.image, dst)?;
            let c = dst.channels();
            let mut filled = warp.image;
            for (k, &ok) in warp.valid.iter().enumerate() {
                if !ok {
                    filled.data_mut()[k * c..k * c + c].copy_from_slice(&dst.data()[k * c..k * c + c]);
                }
            }
            let map = flip_error(&filled, dst, DEFAULT_PPD)?;
            let mut sum = 0.0;
            let mut n = 0usize;
            for (&v, &ok) in map.data().iter().zip(&warp.valid) {
                if ok {
                    sum += v as f64;
                    n += 1;
                }
            }
            let mean = if n == 0 { 0.0 } else { sum / n as f64 };
            Ok((mean, n as f64 / warp.valid.len().max(1) as f64))
        })
        .collect::<Result<_, MetricsError>>()?;
    let per_pair: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    Ok(FlickerReport {
        total: per_pair.iter().sum(),
        valid_fraction: pairs.iter().map(|p| p.1).collect(),
        per_pair,
    })
}
