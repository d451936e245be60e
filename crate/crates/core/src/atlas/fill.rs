use super::{AtlasError, Quantity, TextureAtlas};

/// One pyramid level: interleaved values and per-texel confidence in [0, 1].
struct Level {
    w: usize,
    h: usize,
    values: Vec<f64>,
    weight: Vec<f64>,
}

fn pull(fine: &Level, c: usize) -> Level {
    let (w, h) = (fine.w.div_ceil(2), fine.h.div_ceil(2));
    let mut values = vec![0.0; w * h * c];
    let mut weight = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut wsum = 0.0;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (fx, fy) = (2 * x + dx, 2 * y + dy);
                if fx >= fine.w || fy >= fine.h {
                    continue;
                }
                let j = fy * fine.w + fx;
                let wj = fine.weight[j];
                if wj <= 0.0 {
                    continue;
                }
                wsum += wj;
                for k in 0..c {
                    values[i * c + k] += wj * fine.values[j * c + k];
                }
            }
            if wsum > 0.0 {
                for k in 0..c {
                    values[i * c + k] /= wsum;
                }
            }
            weight[i] = wsum.min(1.0);
        }
    }
    Level { w, h, values, weight }
}

/// Blends each fine texel with its parent: `w·fine + (1 − w)·coarse`.
fn push(fine: &mut Level, coarse: &Level, c: usize) {
    for y in 0..fine.h {
        for x in 0..fine.w {
            let i = y * fine.w + x;
            let wi = fine.weight[i];
            if wi >= 1.0 {
                continue;
            }
            let p = (y / 2) * coarse.w + x / 2;
            for k in 0..c {
                fine.values[i * c + k] = wi * fine.values[i * c + k] + (1.0 - wi) * coarse.values[p * c + k];
            }
            fine.weight[i] = 1.0;
        }
    }
}

/// Pull-push fill of unobserved texels.
///
/// Observed texels are copied through untouched; every other texel gets a
/// convex combination of observed values from the coarsest level at which
/// its neighborhood has data.
pub fn fill_holes(atlas: &TextureAtlas) -> Result<TextureAtlas, AtlasError> {
    if !atlas.observed.iter().any(|&o| o) {
        return Err(AtlasError::Unobserved);
    }
    let mut out = atlas.clone();
    out.filled = true;
    if atlas.observed.iter().all(|&o| o) {
        return Ok(out);
    }
    let r = atlas.resolution;
    for q in Quantity::ALL {
        let c = q.channels();
        let src = atlas.quantity(q).data();
        let mut levels = vec![Level {
            w: r,
            h: r,
            values: src.iter().map(|&v| v as f64).collect(),
            weight: atlas.observed.iter().map(|&o| if o { 1.0 } else { 0.0 }).collect(),
        }];
        while levels.last().map_or(false, |l| l.w > 1 || l.h > 1) {
            let next = pull(levels.last().expect("non-empty"), c);
            levels.push(next);
        }
        for k in (0..levels.len() - 1).rev() {
            let (fine, coarse) = levels.split_at_mut(k + 1);
            push(&mut fine[k], &coarse[0], c);
        }
        let dst = out.quantity_mut(q).data_mut();
        for (i, &obs) in atlas.observed.iter().enumerate() {
            if !obs {
                for k in 0..c {
                    dst[i * c + k] = levels[0].values[i * c + k] as f32;
                }
            }
        }
    }
    Ok(out)
}
