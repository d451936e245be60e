use std::sync::OnceLock;

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use texmerge::atlas::{bake_atlas, BlendWeights, SvbrdfView, SvbrdfViewSet, TextureAtlas};
use texmerge::geometry::{rasterize_gbuffer, NO_TRIANGLE};
use texmerge::imaging::{load_image, save_image};
use texmerge::metrics::flicker_metric;
use texmerge::scenes::{self, ProceduralMaterial};
use texmerge::{Camera, ColorSpace, ImageF, OrbitSpec};

fn room_views() -> &'static (texmerge::TriangleMesh, Vec<SvbrdfView>) {
    static VIEWS: OnceLock<(texmerge::TriangleMesh, Vec<SvbrdfView>)> = OnceLock::new();
    VIEWS.get_or_init(|| {
        let mesh = scenes::furnished_room();
        let spec = OrbitSpec::around_mesh(scenes::room_camera(96), &mesh).unwrap();
        let views = texmerge::geometry::orbit_cameras(&spec)
            .unwrap()
            .into_iter()
            .map(|camera| {
                let m = scenes::render_material_maps(&mesh, &camera, |uv| ProceduralMaterial.eval(uv)).unwrap();
                SvbrdfView {
                    camera,
                    basecolor: m.basecolor,
                    roughness: m.roughness,
                    metallic: m.metallic,
                    depth: m.gbuffer.depth_map(),
                }
            })
            .collect();
        (mesh, views)
    })
}

fn bake(indices: &[usize]) -> TextureAtlas {
    let (mesh, views) = room_views();
    let set = SvbrdfViewSet { views: indices.iter().map(|&i| views[i].clone()).collect() };
    bake_atlas(mesh, &set, &BlendWeights::default(), 256).unwrap()
}

fn max_diff(a: &TextureAtlas, b: &TextureAtlas) -> f32 {
    [(&a.basecolor, &b.basecolor), (&a.roughness, &b.roughness), (&a.metallic, &b.metallic)]
        .iter()
        .flat_map(|(x, y)| x.data().iter().zip(y.data()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f32::max)
}

fn random_camera() -> impl Strategy<Value = Camera> {
    (-3.0..3.0f64, 0.3..3.0f64, -3.0..3.0f64, -1.0..1.0f64, 20.0..80.0f64, 16usize..48).prop_map(|(x, y, z, t, fov, res)| {
        Camera::look_at(Point3::new(x, y, z), Point3::new(t, 0.8, -t), Vector3::y(), fov, res, res + 3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ldr_round_trip_within_half_step(w in 1usize..20, h in 1usize..20, c in 1usize..5, seed in any::<u64>()) {
        let img = ImageF::from_fn(w, h, c, ColorSpace::SRGB, |x, y| {
            let mut s = seed ^ ((x as u64) << 32 | y as u64);
            std::array::from_fn(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 40) as f32 / (1u64 << 24) as f32
            })
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ldr.png");
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        prop_assert_eq!(back.channels(), c);
        for (a, b) in img.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1.0 / 510.0 + 1e-7);
        }
    }

    #[test]
    fn gbuffer_coverage_depth_and_triangle_agree(cam in random_camera()) {
        let g = rasterize_gbuffer(&scenes::furnished_room(), &cam).unwrap();
        for i in 0..g.width * g.height {
            let finite = g.depth[i].is_finite();
            prop_assert_eq!(g.covered(i), finite);
            prop_assert_eq!(g.tri_id[i] != NO_TRIANGLE, finite);
            if finite {
                let n = g.normal[i];
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                prop_assert!((len - 1.0).abs() < 1e-4);
                prop_assert!(g.depth[i] > 0.0);
            }
        }
    }

    #[test]
    fn atlas_observed_iff_weighted_and_in_range(subset in proptest::sample::subsequence(vec![0usize, 1, 2, 3, 4], 1..=5)) {
        let a = bake(&subset);
        for (i, &o) in a.observed.iter().enumerate() {
            prop_assert_eq!(o, a.weight_sum[i] > 0.0);
        }
        for img in [&a.basecolor, &a.roughness, &a.metallic] {
            prop_assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn atlas_ignores_view_order_and_duplicates(
        order in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle(),
        dup in 0usize..5,
        copies in 1usize..4,
    ) {
        let base = bake(&[0, 1, 2, 3, 4]);
        prop_assert!(max_diff(&base, &bake(&order)) <= 1e-6);
        let mut with_dups = order.clone();
        with_dups.extend(std::iter::repeat_n(dup, copies));
        let single = bake(&[dup]);
        prop_assert!(max_diff(&single, &bake(&vec![dup; copies + 1])) <= 1e-6);
        prop_assert_eq!(&base.observed, &bake(&with_dups).observed);
    }

    #[test]
    fn flicker_pairs_in_unit_range_and_sum_to_total(sigma in 0.0f32..0.3, seed in any::<u64>(), n in 2usize..5) {
        let (_, views) = room_views();
        let mut s = seed;
        let frames: Vec<ImageF> = views[..n]
            .iter()
            .map(|v| {
                let b = &v.basecolor;
                let data = b
                    .data()
                    .iter()
                    .map(|x| {
                        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let u = (s >> 40) as f32 / (1u64 << 24) as f32;
                        (x + sigma * (2.0 * u - 1.0)).clamp(0.0, 1.0)
                    })
                    .collect();
                ImageF::new(b.width(), b.height(), 3, data, ColorSpace::SRGB).unwrap()
            })
            .collect();
        let cams: Vec<Camera> = views[..n].iter().map(|v| v.camera.clone()).collect();
        let depths: Vec<_> = views[..n].iter().map(|v| v.depth.clone()).collect();
        let r = flicker_metric(&frames, &cams, &depths, 0.01).unwrap();
        prop_assert_eq!(r.per_pair.len(), n - 1);
        prop_assert!(r.per_pair.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!(r.valid_fraction.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert_eq!(r.total, r.per_pair.iter().sum::<f64>());
    }
}

#[test]
fn image_rejects_bad_length_and_out_of_range_srgb() {
    assert!(ImageF::new(2, 2, 3, vec![0.0; 11], ColorSpace::LinearRGB).is_err());
    assert!(ImageF::new(1, 1, 5, vec![0.0; 5], ColorSpace::Scalar).is_err());
    assert!(ImageF::new(1, 1, 1, vec![1.5], ColorSpace::SRGB).is_err());
    assert!(ImageF::new(1, 1, 1, vec![1.5], ColorSpace::LinearRGB).is_ok());
}
