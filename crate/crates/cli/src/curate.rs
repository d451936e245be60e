//! Dataset curation: drop small files, center-crop to a square, box-resize.

use std::path::{Path, PathBuf};

use serde::Serialize;
use texmerge::imaging::{load_image, save_image};
use texmerge::{ColorSpace, ImageF};

use crate::error::{runtime, CliError};

pub const DEFAULT_MIN_BYTES: u64 = 2_097_152;
pub const DEFAULT_TARGET_RES: usize = 512;

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct CurateReport {
    pub total_files: usize,
    pub removed: Vec<String>,
    pub removed_fraction: f64,
    pub written: Vec<String>,
    pub skipped: Vec<String>,
}

/// Largest centered square.
pub fn center_crop(img: &ImageF) -> ImageF {
    let side = img.width().min(img.height());
    let x0 = (img.width() - side) / 2;
    let y0 = (img.height() - side) / 2;
    let c = img.channels();
    let mut data = Vec::with_capacity(side * side * c);
    for y in 0..side {
        let row = ((y0 + y) * img.width() + x0) * c;
        data.extend_from_slice(&img.data()[row..row + side * c]);
    }
    ImageF::new(side, side, c, data, img.colorspace()).expect("crop stays in range")
}

/// Source pixel weights for each output sample of a box filter from `src` to `dst` samples.
fn box_taps(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|j| {
            let (a, b) = (j as f64 * scale, (j + 1) as f64 * scale);
            let mut taps = Vec::new();
            let mut i = a.floor() as usize;
            while (i as f64) < b && i < src {
                let w = (b.min(i as f64 + 1.0) - a.max(i as f64)).max(0.0);
                if w > 0.0 {
                    taps.push((i, w / scale));
                }
                i += 1;
            }
            taps
        })
        .collect()
}

/// Area-averaging resize; the identity when the size already matches.
pub fn box_resize(img: &ImageF, width: usize, height: usize) -> ImageF {
    if img.width() == width && img.height() == height {
        return img.clone();
    }
    let c = img.channels();
    let (tx, ty) = (box_taps(img.width(), width), box_taps(img.height(), height));
    let mut rows = vec![0.0f64; img.height() * width * c];
    for y in 0..img.height() {
        for (x, taps) in tx.iter().enumerate() {
            for &(sx, w) in taps {
                for k in 0..c {
                    rows[(y * width + x) * c + k] += w * img.get(sx, y, k) as f64;
                }
            }
        }
    }
    let srgb = img.colorspace() == ColorSpace::SRGB;
    let mut out = vec![0.0f32; width * height * c];
    for (y, taps) in ty.iter().enumerate() {
        for x in 0..width {
            for k in 0..c {
                let v: f64 = taps.iter().map(|&(sy, w)| w * rows[(sy * width + x) * c + k]).sum();
                out[(y * width + x) * c + k] = if srgb { v.clamp(0.0, 1.0) as f32 } else { v as f32 };
            }
        }
    }
    ImageF::new(width, height, c, out, img.colorspace()).expect("resize keeps the input range")
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "exr")
    )
}

/// Lists (or moves into `move_to`) files under `min_bytes`, then writes a
/// square `target_res²` version of every remaining image into `out_dir`.
pub fn curate(
    dir: &Path,
    min_bytes: u64,
    target_res: usize,
    out_dir: &Path,
    move_to: Option<&Path>,
) -> Result<CurateReport, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Validation(format!("dataset directory not found: {}", dir.display())));
    }
    if target_res == 0 {
        return Err(CliError::Validation("target resolution must be positive".into()));
    }
    let mut files: Vec<(PathBuf, u64)> = std::fs::read_dir(dir)
        .map_err(runtime(dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let meta = e.metadata().ok()?;
            meta.is_file().then(|| (e.path(), meta.len()))
        })
        .collect();
    files.sort();
    let mut report = CurateReport { total_files: files.len(), ..Default::default() };
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut keep = Vec::new();
    for (path, size) in files {
        if size < min_bytes {
            report.removed.push(name(&path));
            if let Some(dest) = move_to {
                std::fs::create_dir_all(dest).map_err(runtime(dest.display()))?;
                std::fs::rename(&path, dest.join(name(&path))).map_err(runtime(path.display()))?;
            }
        } else {
            keep.push(path);
        }
    }
    report.removed_fraction = if report.total_files == 0 {
        0.0
    } else {
        report.removed.len() as f64 / report.total_files as f64
    };
    std::fs::create_dir_all(out_dir).map_err(runtime(out_dir.display()))?;
    for path in keep {
        if !is_image(&path) {
            eprintln!("warning: skipping {}: not a PNG or EXR image", path.display());
            report.skipped.push(name(&path));
            continue;
        }
        let img = match load_image(&path) {
            Ok(img) => img,
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                report.skipped.push(name(&path));
                continue;
            }
        };
        let out = box_resize(&center_crop(&img), target_res, target_res);
        save_image(&out, out_dir.join(name(&path))).map_err(runtime(path.display()))?;
        report.written.push(name(&path));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageF {
        ImageF::from_fn(w, h, 3, ColorSpace::SRGB, |x, y| {
            let v = (x + 2 * y) as f32 / (w + 2 * h) as f32;
            [v, 1.0 - v, 0.5, 0.0]
        })
    }

    #[test]
    fn crop_takes_the_center_square() {
        let img = ramp(768, 512);
        let c = center_crop(&img);
        assert_eq!((c.width(), c.height()), (512, 512));
        assert_eq!(c.pixel(0, 0), img.pixel(128, 0));
        assert_eq!(c.pixel(511, 511), img.pixel(639, 511));
        let tall = center_crop(&ramp(10, 15));
        assert_eq!(tall.pixel(0, 0), ramp(10, 15).pixel(0, 2));
    }

    #[test]
    fn square_target_is_identity() {
        let img = ramp(512, 512);
        let out = box_resize(&center_crop(&img), 512, 512);
        assert!(out.data().iter().zip(img.data()).all(|(a, b)| (a - b).abs() <= 1e-6));
    }

    #[test]
    fn integer_downscale_averages_blocks() {
        let img = ramp(8, 8);
        let out = box_resize(&img, 4, 4);
        for y in 0..4 {
            for x in 0..4 {
                for c in 0..3 {
                    let mean = (0..2)
                        .flat_map(|dy| (0..2).map(move |dx| (dx, dy)))
                        .map(|(dx, dy)| img.get(2 * x + dx, 2 * y + dy, c) as f64)
                        .sum::<f64>()
                        / 4.0;
                    assert!((out.get(x, y, c) as f64 - mean).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn fractional_resize_preserves_the_mean() {
        let img = ramp(300, 300);
        let out = box_resize(&img, 128, 128);
        for (a, b) in img.channel_means().iter().zip(out.channel_means()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn box_taps_sum_to_one() {
        for (s, d) in [(768, 512), (512, 512), (100, 7), (3, 10)] {
            for taps in box_taps(s, d) {
                let total: f64 = taps.iter().map(|t| t.1).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
