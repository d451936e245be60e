#![allow(dead_code)]

use std::path::PathBuf;

use serde::Deserialize;
use texmerge::{ColorSpace, ImageF};

pub const FLIP_FIXTURES: [&str; 4] = ["gray_offset", "color_noise", "checker_shift", "black_white"];

#[derive(Deserialize)]
struct RawFixture {
    ppd: f64,
    width: usize,
    height: usize,
    reference: Vec<f32>,
    test: Vec<f32>,
    flip: Vec<f32>,
    mean: f64,
}

/// Reference/test pair with the per-pixel map and mean produced by the
/// reference FLIP implementation.
pub struct FlipFixture {
    pub name: String,
    pub ppd: f64,
    pub reference: ImageF,
    pub test: ImageF,
    pub flip: Vec<f32>,
    pub mean: f64,
}

pub fn flip_fixture(name: &str) -> FlipFixture {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/flip").join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let raw: RawFixture = serde_json::from_str(&text).expect("fixture json");
    let img = |d: Vec<f32>| ImageF::new(raw.width, raw.height, 3, d, ColorSpace::SRGB).expect("fixture image");
    FlipFixture {
        name: name.to_string(),
        ppd: raw.ppd,
        reference: img(raw.reference),
        test: img(raw.test),
        flip: raw.flip,
        mean: raw.mean,
    }
}

/// Largest per-pixel deviation of `flip_error` from the fixture map.
pub fn flip_max_deviation(f: &FlipFixture) -> f64 {
    let map = texmerge::metrics::flip_error(&f.reference, &f.test, f.ppd).expect("flip_error");
    assert_eq!(map.data().len(), f.flip.len(), "{}", f.name);
    map.data().iter().zip(&f.flip).map(|(&a, &b)| (a as f64 - b as f64).abs()).fold(0.0, f64::max)
}
