use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use texmerge::atlas::{bake_atlas, fill_holes, SvbrdfView, SvbrdfViewSet, TextureAtlas};
use texmerge::geometry::{contour_map, rasterize_gbuffer, ContourParams};
use texmerge::imaging::{load_image, save_image, save_mask_png, tonemap_reinhard};
use texmerge::metrics::{flicker_metric, flip_mean, psnr, si_psnr, ssim};
use texmerge::render::render_view_with;
use texmerge::reproject::{hole_stats, warp_view};
use texmerge::scenes::{render_material_maps, ProceduralMaterial};
use texmerge::{ColorSpace, DepthMap, ImageF};

use crate::config::{view_name, Pipeline};
use crate::error::{runtime, CliError};

fn mkdir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(runtime(dir.display()))
}

fn save(img: &ImageF, path: &Path) -> Result<String, CliError> {
    save_image(img, path).map_err(runtime(path.display()))?;
    Ok(path.display().to_string())
}

/// First of `<dir>/<stem>.png` or `<dir>/<stem>.exr` that exists.
fn find_map(dir: &Path, stem: &str) -> Result<PathBuf, CliError> {
    ["png", "exr"]
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.exists())
        .ok_or_else(|| CliError::Validation(format!("missing {stem}.png or {stem}.exr in {}", dir.display())))
}

fn load_checked(path: &Path, p: &Pipeline, view: usize, channels: usize) -> Result<ImageF, CliError> {
    let img = load_image(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let cam = &p.cameras[view];
    if img.width() != cam.width || img.height() != cam.height || img.channels() < channels {
        return Err(CliError::Validation(format!(
            "{} is {}x{} with {} channels; view {view} needs {}x{} with {channels}",
            path.display(),
            img.width(),
            img.height(),
            img.channels(),
            cam.width,
            cam.height
        )));
    }
    Ok(img)
}

/// Basecolor, roughness and metallic maps of one view.
fn load_view_maps(dir: &Path, p: &Pipeline, view: usize) -> Result<[ImageF; 3], CliError> {
    let mut base = load_checked(&find_map(dir, "basecolor")?, p, view, 3)?;
    if base.channels() == 4 {
        base = ImageF::stack(&[&base.channel(0, base.colorspace()), &base.channel(1, base.colorspace()), &base.channel(2, base.colorspace())])
            .map_err(runtime("basecolor"))?;
    }
    let scalar = |stem: &str| -> Result<ImageF, CliError> {
        let img = load_checked(&find_map(dir, stem)?, p, view, 1)?;
        Ok(img.channel(0, ColorSpace::Scalar))
    };
    Ok([base, scalar("roughness")?, scalar("metallic")?])
}

fn load_depth(p: &Pipeline, view: usize) -> Result<DepthMap, CliError> {
    let path = p.gbuffer_dir(view).join("depth.exr");
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "missing G-buffer {}; run `texmerge gbuffer` first",
            path.display()
        )));
    }
    let img = load_checked(&path, p, view, 1)?;
    Ok(DepthMap::from_image(&img))
}

fn check_view(p: &Pipeline, view: usize, what: &str) -> Result<(), CliError> {
    if view >= p.cameras.len() {
        return Err(CliError::Validation(format!("{what}: view {view} out of range ({} cameras)", p.cameras.len())));
    }
    Ok(())
}

/// Depth, normal, contour and coverage buffers per view, plus the camera list.
pub fn cmd_gbuffer(p: &Pipeline, contour: ContourParams, procedural_maps: bool) -> Result<Value, CliError> {
    let mut files = Vec::new();
    mkdir(&p.out)?;
    let cams_path = p.out.join("cameras.json");
    let text = serde_json::to_string_pretty(&p.cameras).map_err(runtime("cameras"))?;
    std::fs::write(&cams_path, text).map_err(runtime(cams_path.display()))?;
    for (i, cam) in p.cameras.iter().enumerate() {
        let dir = p.gbuffer_dir(i);
        mkdir(&dir)?;
        let g = rasterize_gbuffer(&p.mesh, cam).map_err(runtime(format!("view {i}")))?;
        files.push(save(&g.depth_image(), &dir.join("depth.exr"))?);
        files.push(save(&g.normal_image(), &dir.join("normal.exr"))?);
        let edges = contour_map(&g, contour).map_err(runtime(format!("view {i}")))?;
        files.push(save(&edges, &dir.join("contour.png"))?);
        let cov = dir.join("coverage.png");
        save_mask_png(&g.coverage(), g.width, g.height, &cov).map_err(runtime(cov.display()))?;
        files.push(cov.display().to_string());
        if procedural_maps {
            let m = render_material_maps(&p.mesh, cam, |uv| ProceduralMaterial.eval(uv)).map_err(runtime(format!("view {i}")))?;
            let vdir = p.view_dir(i);
            mkdir(&vdir)?;
            files.push(save(&m.basecolor, &vdir.join("basecolor.png"))?);
            files.push(save(&m.roughness, &vdir.join("roughness.exr"))?);
            files.push(save(&m.metallic, &vdir.join("metallic.exr"))?);
        }
    }
    Ok(json!({ "views": p.cameras.len(), "cameras": cams_path.display().to_string(), "files": files }))
}

/// Warps one view's image into another view and writes the disocclusion mask.
pub fn cmd_warp(p: &Pipeline, src: usize, dst: usize, image: Option<&Path>) -> Result<Value, CliError> {
    check_view(p, src, "--src")?;
    check_view(p, dst, "--dst")?;
    let path = match image {
        Some(path) => path.to_path_buf(),
        None => find_map(&p.view_dir(src), "basecolor")?,
    };
    let img = load_checked(&path, p, src, 1)?;
    let (ds, dd) = (load_depth(p, src)?, load_depth(p, dst)?);
    let w = warp_view(&img, &p.cameras[src], &ds, &p.cameras[dst], &dd, p.eps_rel).map_err(runtime("warp"))?;
    let dir = p.out.join("warp").join(format!("{}_to_{}", view_name(src), view_name(dst)));
    mkdir(&dir)?;
    let warped = save(&w.image, &dir.join("warped.exr"))?;
    if w.image.colorspace() != ColorSpace::YCxCz && w.image.data().iter().all(|v| (0.0..=1.0).contains(v)) {
        save(&w.image, &dir.join("warped.png"))?;
    }
    let mask = dir.join("mask.png");
    save_mask_png(&w.disoccluded, w.width(), w.height(), &mask).map_err(runtime(mask.display()))?;
    let valid = w.valid.iter().filter(|&&v| v).count() as f64 / w.valid.len() as f64;
    Ok(json!({
        "src": src,
        "dst": dst,
        "hole_fraction": hole_stats(&w),
        "valid_fraction": valid,
        "warped": warped,
        "mask": mask.display().to_string(),
    }))
}

fn load_views(p: &Pipeline) -> Result<SvbrdfViewSet, CliError> {
    let views = (0..p.cameras.len())
        .map(|i| {
            let [basecolor, roughness, metallic] = load_view_maps(&p.view_dir(i), p, i)?;
            Ok(SvbrdfView { camera: p.cameras[i].clone(), basecolor, roughness, metallic, depth: load_depth(p, i)? })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SvbrdfViewSet { views })
}

/// Merges every view into a hole-filled atlas.
pub fn cmd_bake(p: &Pipeline) -> Result<Value, CliError> {
    let views = load_views(p)?;
    let atlas = bake_atlas(&p.mesh, &views, &p.blend, p.atlas_res).map_err(runtime("bake"))?;
    let observed = atlas.observed_count() as f64 / (p.atlas_res * p.atlas_res) as f64;
    let filled = fill_holes(&atlas).map_err(runtime("hole filling"))?;
    let dir = p.out.join("atlas");
    mkdir(&dir)?;
    filled.save(&dir).map_err(runtime(dir.display()))?;
    Ok(json!({
        "views": views.views.len(),
        "resolution": p.atlas_res,
        "observed_fraction": observed,
        "atlas": dir.join("atlas.exr").display().to_string(),
    }))
}

/// Relights the atlas from each camera (or only `view`) under the configured lights.
pub fn cmd_render(p: &Pipeline, view: Option<usize>) -> Result<Value, CliError> {
    if !p.atlas.exists() {
        return Err(CliError::Validation(format!("atlas: file not found: {}; run `texmerge bake` first", p.atlas.display())));
    }
    let atlas = TextureAtlas::load(&p.atlas).map_err(|e| CliError::Validation(format!("atlas {}: {e}", p.atlas.display())))?;
    let views: Vec<usize> = match view {
        Some(v) => {
            check_view(p, v, "--view")?;
            vec![v]
        }
        None => (0..p.cameras.len()).collect(),
    };
    let dir = p.out.join("render");
    mkdir(&dir)?;
    let mut images = Vec::new();
    for i in views {
        let img = render_view_with(&p.mesh, &atlas, &p.cameras[i], &p.lights, &p.render).map_err(runtime(format!("render view {i}")))?;
        let exr = save(&img, &dir.join(format!("{}.exr", view_name(i))))?;
        let ldr = tonemap_reinhard(&img, p.exposure).map_err(runtime("tonemap"))?;
        let png = save(&ldr, &dir.join(format!("{}.png", view_name(i))))?;
        images.push(json!({ "view": i, "exr": exr, "png": png }));
    }
    Ok(json!({ "lights": p.lights.len(), "images": images }))
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Single-view metrics against reference maps and the flicker metric over the
/// predicted basecolor sequence. Disabled or unavailable metrics are null.
pub fn cmd_metrics(p: &Pipeline) -> Result<Value, CliError> {
    let m = &p.metrics;
    let frames = (0..p.cameras.len())
        .map(|i| Ok(load_view_maps(&p.view_dir(i), p, i)?[0].clone()))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (mut ps, mut ss, mut fl, mut si) = (vec![], vec![], vec![], vec![]);
    if let Some(ref_dir) = &m.reference_dir {
        for (i, pred) in frames.iter().enumerate() {
            let gt = load_view_maps(&ref_dir.join(view_name(i)), p, i)?[0].clone();
            let ctx = || format!("metrics view {i}");
            if m.psnr {
                ps.push(psnr(pred, &gt, 1.0).map_err(runtime(ctx()))?);
            }
            if m.ssim {
                ss.push(ssim(pred, &gt).map_err(runtime(ctx()))?);
            }
            if m.flip {
                fl.push(flip_mean(&gt, pred, m.ppd).map_err(runtime(ctx()))?);
            }
            if m.si_psnr {
                si.push(si_psnr(pred, &gt).map_err(runtime(ctx()))?);
            }
        }
    }
    let flicker = if m.flicker && frames.len() >= 2 {
        let depths = (0..frames.len()).map(|i| load_depth(p, i)).collect::<Result<Vec<_>, _>>()?;
        Some(flicker_metric(&frames, &p.cameras, &depths, p.eps_rel).map_err(runtime("flicker"))?)
    } else {
        None
    };
    let dir = p.out.join("metrics");
    mkdir(&dir)?;
    if let Some(f) = &flicker {
        let csv_path = dir.join("flicker.csv");
        let mut w = csv::Writer::from_path(&csv_path).map_err(runtime(csv_path.display()))?;
        w.write_record(["pair", "flip", "valid_fraction"]).map_err(runtime(csv_path.display()))?;
        for (k, (v, frac)) in f.per_pair.iter().zip(&f.valid_fraction).enumerate() {
            w.write_record([k.to_string(), v.to_string(), frac.to_string()]).map_err(runtime(csv_path.display()))?;
        }
        w.flush().map_err(runtime(csv_path.display()))?;
    }
    let report = json!({
        "psnr": mean_of(&ps),
        "ssim": mean_of(&ss),
        "flip_mean": mean_of(&fl),
        "si_psnr": mean_of(&si),
        "flicker": flicker.as_ref().map(|f| json!({
            "per_pair": f.per_pair,
            "total": f.total,
            "mean": f.mean(),
            "valid_fraction": f.valid_fraction,
        })),
    });
    let json_path = dir.join("metrics.json");
    let text = serde_json::to_string_pretty(&report).map_err(runtime("metrics"))?;
    std::fs::write(&json_path, text).map_err(runtime(json_path.display()))?;
    Ok(report)
}
