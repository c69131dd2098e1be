use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

use adaptive_boxfilter::boxspline2d::Covariance2;
use adaptive_boxfilter::scalemap::{
    from_ellipse_field, read_map, structure_tensor_fields, structure_tensor_map, write_map,
    StructureTensorParams,
};
use adaptive_boxfilter::{Error, Image2D, ScaleMap, ScaleVector4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stripes(w: usize, h: usize, angle: f64) -> Image2D {
    let (c, s) = (angle.cos(), angle.sin());
    Image2D::from_fn(w, h, |x, y| (0.7 * (x as f64 * c + y as f64 * s)).sin() * 0.5 + 0.5).unwrap()
}

fn wrap_half_turn(t: f64) -> f64 {
    let mut t = t % std::f64::consts::PI;
    if t > FRAC_PI_2 {
        t -= std::f64::consts::PI;
    } else if t <= -FRAC_PI_2 {
        t += std::f64::consts::PI;
    }
    t
}

#[test]
fn ellipse_field_round_trips_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let (w, h) = (12, 10);
    let n = w * h;
    let major: Vec<f64> = (0..n).map(|_| rng.gen_range(0.8..4.0)).collect();
    let minor: Vec<f64> = major.iter().map(|m| m * rng.gen_range(0.5..1.0)).collect();
    let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.2..3.2)).collect();
    let (map, report) = from_ellipse_field(w, h, &major, &minor, &theta).unwrap();
    let mut checked = 0;
    for i in 0..n {
        if report.projected.contains(&i) || report.scale_clamped.contains(&i) {
            continue;
        }
        let want = Covariance2::from_ellipse(major[i], minor[i], theta[i]);
        let got = map.scales()[i].covariance();
        assert!(got.max_abs_diff(&want) <= 1e-9, "pixel {i}");
        checked += 1;
    }
    assert!(checked > n / 2, "only {checked} feasible pixels");
}

#[test]
fn infeasible_ellipses_are_reported_not_rejected() {
    // Very thin ellipse at 30 degrees lies outside the four-direction family.
    let (map, report) = from_ellipse_field(2, 1, &[4.0, 1.0], &[0.3, 1.0], &[FRAC_PI_6, 0.0]).unwrap();
    assert_eq!(map.dims(), (2, 1));
    assert_eq!(report.projected, vec![0]);
    assert!(!report.is_empty());
}

#[test]
fn orientation_rotates_with_image() {
    let img = stripes(33, 33, 0.4);
    let rotated = Image2D::from_fn(33, 33, |x, y| img.get(y, 32 - x)).unwrap();
    let params = StructureTensorParams::default();
    let f = structure_tensor_fields(&img, &params).unwrap();
    let g = structure_tensor_fields(&rotated, &params).unwrap();
    for y in 8..25 {
        for x in 8..25 {
            // Pixel (x, y) of the rotated image shows pixel (y, 32 - x) of the original.
            let src = f.theta[(32 - x) * 33 + y];
            let dst = g.theta[y * 33 + x];
            let diff = wrap_half_turn(dst - (src + FRAC_PI_2)).abs();
            assert!(diff < 1e-9, "({x}, {y}): {src} vs {dst}");
        }
    }
}

#[test]
fn flat_image_gives_isotropic_base_map() {
    let img = Image2D::new(9, 7, vec![0.3; 63]).unwrap();
    let params = StructureTensorParams::default();
    let (map, report) = structure_tensor_map(&img, &params).unwrap();
    assert!(report.is_empty());
    let want = Covariance2::isotropic(params.sigma_base * params.sigma_base);
    for s in map.scales() {
        assert!(s.covariance().max_abs_diff(&want) < 1e-9);
    }
}

#[test]
fn structure_tensor_map_is_deterministic() {
    let img = stripes(40, 30, 1.1);
    let params = StructureTensorParams::default();
    let (a, _) = structure_tensor_map(&img, &params).unwrap();
    let (b, _) = structure_tensor_map(&img, &params).unwrap();
    assert_eq!(write_map(&a), write_map(&b));
}

#[test]
fn malformed_map_files_are_rejected() {
    let map = ScaleMap::new(2, 1, vec![ScaleVector4::uniform(2.0).unwrap(); 2]).unwrap();
    let bytes = write_map(&map);
    assert!(matches!(read_map(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(read_map(&extra), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(read_map(&bad), Err(Error::Format(_))));
    let mut negative = bytes;
    negative[12..16].copy_from_slice(&(-1.0f32).to_le_bytes());
    assert!(read_map(&negative).is_err());
}

proptest! {
    #[test]
    fn svm4_round_trip(
        w in 1usize..6,
        h in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales = (0..w * h)
            .map(|_| {
                // Values representable in f32 survive the file format unchanged.
                let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.1f32..50.0) as f64);
                ScaleVector4::new(a).unwrap()
            })
            .collect();
        let map = ScaleMap::new(w, h, scales).unwrap();
        let bytes = write_map(&map);
        prop_assert_eq!(bytes.len(), 12 + 16 * w * h);
        prop_assert_eq!(&bytes[..4], b"SVM4");
        prop_assert_eq!(read_map(&bytes).unwrap(), map);
    }
}
