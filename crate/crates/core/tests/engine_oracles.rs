mod common;

use std::f64::consts::SQRT_2;

use adaptive_boxfilter::boxspline2d::{kernel_grid_eval, RadialBoxSpline};
use adaptive_boxfilter::engine::{
    filter, filter_constant, filter_with, reference_filter, FilterOptions,
};
use adaptive_boxfilter::scalemap::{constant_map, ScaleMap};
use adaptive_boxfilter::{Exec, Image2D, Rect, ScaleVector4};
use common::{box4_half_extent, exact_box4};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image2D {
    let samples = (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect();
    Image2D::new(w, h, samples).unwrap()
}

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> ScaleMap {
    let scales = (0..w * h)
        .map(|_| ScaleVector4::new(std::array::from_fn(|_| rng.gen_range(lo..hi))).unwrap())
        .collect();
    ScaleMap::new(w, h, scales).unwrap()
}

/// Exact projection of the zero-extended image onto per-pixel box splines.
fn exact_filter(image: &Image2D, map: &ScaleMap) -> Image2D {
    Image2D::from_fn(image.width(), image.height(), |x, y| {
        let a = map.get(x, y).components();
        let (hx, hy) = box4_half_extent(a);
        let (rx, ry) = (hx.ceil() as i64, hy.ceil() as i64);
        let mut acc = 0.0;
        for dy in -ry..=ry {
            for dx in -rx..=rx {
                acc += image.get_or_zero(x as i64 + dx, y as i64 + dy)
                    * exact_box4(a, dx as f64, dy as f64);
            }
        }
        acc
    })
    .unwrap()
}

#[test]
fn impulse_response_is_the_sampled_kernel() {
    for a in [[2.0; 4], [1.5, SQRT_2, 3.0, 2.2], [6.0; 4]] {
        let sv = ScaleVector4::new(a).unwrap();
        let n = 31;
        let c = n / 2;
        let img = Image2D::impulse(n, n, c, c).unwrap();
        let out = filter_constant(&img, &sv, &FilterOptions::default()).unwrap();
        let grid = kernel_grid_eval(&RadialBoxSpline::four(sv), 1.0 / 16.0).unwrap();
        let mut worst_grid = 0.0f64;
        let mut worst_exact = 0.0f64;
        for y in 0..n {
            for x in 0..n {
                let (dx, dy) = (x as i64 - c as i64, y as i64 - c as i64);
                let v = out.get(x, y);
                worst_grid = worst_grid.max((v - grid.at_lattice(dx, dy).unwrap()).abs());
                worst_exact = worst_exact.max((v - exact_box4(a, dx as f64, dy as f64)).abs());
            }
        }
        assert!(worst_grid <= 1e-3, "{a:?}: grid {worst_grid}");
        assert!(worst_exact <= 1e-12, "{a:?}: exact {worst_exact}");
    }
}

#[test]
fn engine_matches_exact_projection_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let img = random_image(&mut rng, 20, 18);
        let map = random_map(&mut rng, 20, 18, 0.5, 5.0);
        let fast = filter(&img, &map).unwrap();
        let exact = exact_filter(&img, &map);
        let err = fast.max_abs_diff(&exact, None).unwrap();
        assert!(err < 1e-11, "{err}");
    }
}

#[test]
fn engine_matches_reference_filter() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..3 {
        let img = random_image(&mut rng, 24, 24);
        let map = random_map(&mut rng, 24, 24, 1.0, 4.0);
        let fast = filter(&img, &map).unwrap();
        let slow = reference_filter(&img, &map, 1.0 / 32.0).unwrap();
        let valid = fast.valid_region();
        assert_eq!(valid, slow.valid_region());
        let err = fast.max_abs_diff(&slow, valid).unwrap();
        assert!(err <= 1e-3, "{err}");
    }
}

/// DC gain of the sampled kernel: its sum over the integer lattice.
fn lattice_sum(a: [f64; 4]) -> f64 {
    let (hx, hy) = box4_half_extent(a);
    let (rx, ry) = (hx.ceil() as i64, hy.ceil() as i64);
    (-ry..=ry)
        .flat_map(|y| (-rx..=rx).map(move |x| (x, y)))
        .map(|(x, y)| exact_box4(a, x as f64, y as f64))
        .sum()
}

#[test]
fn constant_image_is_preserved() {
    // Scales that are whole multiples of the lattice step along each direction.
    for a in [[2.0; 4], [3.0, 2.0 * SQRT_2, 5.0, SQRT_2], [6.0; 4], [4.0, 3.0 * SQRT_2, 2.0, 2.0 * SQRT_2]] {
        let img = Image2D::new(40, 40, vec![0.8; 1600]).unwrap();
        let out = filter_constant(&img, &ScaleVector4::new(a).unwrap(), &FilterOptions::default())
            .unwrap();
        let valid = out.valid_region().unwrap();
        assert!(!valid.is_empty());
        let err = valid.pixels().map(|(x, y)| (out.get(x, y) - 0.8).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9, "{a:?}: {err}");
    }
}

#[test]
fn constant_image_gives_lattice_sum_of_kernel() {
    // Off-lattice scales leave a DC ripple of the sampled kernel; the engine
    // must reproduce it exactly rather than hide it.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = Image2D::new(40, 40, vec![0.8; 1600]).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(2.0..6.0));
        let out = filter_constant(&img, &ScaleVector4::new(a).unwrap(), &FilterOptions::default())
            .unwrap();
        let want = 0.8 * lattice_sum(a);
        worst = worst.max((want / 0.8 - 1.0).abs());
        for (x, y) in out.valid_region().unwrap().pixels() {
            assert!((out.get(x, y) - want).abs() < 1e-10, "{a:?}");
        }
    }
    println!("largest relative DC deviation over 40 random a in [2,6]: {worst:.3e}");
}

#[test]
fn zp_scales_reproduce_zp_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let img = random_image(&mut rng, 12, 12);
    let out = filter_constant(&img, &ScaleVector4::ZP, &FilterOptions::default()).unwrap();
    for y in 0..12 {
        for x in 0..12 {
            let mut want = 0.0;
            for dy in -2i64..=2 {
                for dx in -2i64..=2 {
                    want += img.get_or_zero(x as i64 + dx, y as i64 + dy)
                        * adaptive_boxfilter::boxspline2d::zp_eval(dx as f64, dy as f64);
                }
            }
            assert!((out.get(x, y) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn impulse_pair_under_varying_map() {
    // Left half small isotropic kernels, right half elongated along 45 degrees.
    let (w, h) = (40, 24);
    let small = ScaleVector4::uniform(1.5).unwrap();
    let long = ScaleVector4::new([0.5, 7.0, 0.5, 1.0]).unwrap();
    let scales = (0..w * h)
        .map(|i| if i % w < w / 2 { small } else { long })
        .collect();
    let map = ScaleMap::new(w, h, scales).unwrap();
    let mut samples = vec![0.0; w * h];
    samples[12 * w + 9] = 1.0;
    samples[12 * w + 30] = 1.0;
    let img = Image2D::new(w, h, samples).unwrap();
    let out = filter(&img, &map).unwrap();
    let oracle = exact_filter(&img, &map);
    assert!(out.max_abs_diff(&oracle, None).unwrap() < 1e-12);
    let slow = reference_filter(&img, &map, 1.0 / 32.0).unwrap();
    assert!(out.max_abs_diff(&slow, None).unwrap() < 1e-3);
    // Each output pixel sees the impulse(s) through its own kernel only.
    for y in 0..h {
        for x in 0..w {
            let a = map.get(x, y).components();
            let want = exact_box4(a, 9.0 - x as f64, 12.0 - y as f64)
                + exact_box4(a, 30.0 - x as f64, 12.0 - y as f64);
            assert!((out.get(x, y) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn impulse_response_moments_match_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let a = ScaleVector4::new(std::array::from_fn(|_| rng.gen_range(2.0..6.0))).unwrap();
        let n = 25;
        let c = (n / 2) as f64;
        let img = Image2D::impulse(n, n, n / 2, n / 2).unwrap();
        let out = filter_constant(&img, &a, &FilterOptions::default()).unwrap();
        let (mut m0, mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0, 0.0);
        for y in 0..n {
            for x in 0..n {
                let v = out.get(x, y);
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                m0 += v;
                xx += v * dx * dx;
                xy += v * dx * dy;
                yy += v * dy * dy;
            }
        }
        let want = a.covariance();
        let scale = want.xx.max(want.yy);
        assert!((xx / m0 - want.xx).abs() <= 0.02 * want.xx, "{a:?}");
        assert!((yy / m0 - want.yy).abs() <= 0.02 * want.yy, "{a:?}");
        assert!((xy / m0 - want.xy).abs() <= 0.02 * scale, "{a:?}");
    }
}

#[test]
fn threads_do_not_change_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let img = random_image(&mut rng, 48, 40);
    let map = random_map(&mut rng, 48, 40, 1.0, 6.0);
    let seq = filter_with(&img, &map, &FilterOptions::sequential()).unwrap();
    let par = adaptive_boxfilter::exec::with_threads(4, || {
        filter_with(
            &img,
            &map,
            &FilterOptions {
                exec: Exec::Parallel,
                ..FilterOptions::default()
            },
        )
        .unwrap()
    });
    assert_eq!(seq, par);
}

#[test]
fn mean_subtraction_only_changes_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let img = random_image(&mut rng, 64, 64);
    let map = random_map(&mut rng, 64, 64, 1.0, 8.0);
    let on = filter(&img, &map).unwrap();
    let off = filter_with(
        &img,
        &map,
        &FilterOptions {
            mean_subtract: false,
            ..FilterOptions::default()
        },
    )
    .unwrap();
    assert!(on.max_abs_diff(&off, None).unwrap() < 1e-9);
}

#[test]
fn constant_map_fast_path_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..5 {
        let img = random_image(&mut rng, 32, 32);
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..6.0));
        let map = constant_map(32, 32, a).unwrap();
        let slow = filter(&img, &map).unwrap();
        let fast =
            filter_constant(&img, &ScaleVector4::new(a).unwrap(), &FilterOptions::default()).unwrap();
        assert_eq!(slow.samples(), fast.samples());
        assert_eq!(slow.valid_region(), fast.valid_region());
    }
}

#[test]
fn integer_shift_commutes_with_filtering() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (w, h) = (30, 26);
    let content = random_image(&mut rng, 12, 10);
    let place = |ox: usize, oy: usize| {
        Image2D::from_fn(w, h, |x, y| {
            if x >= ox && y >= oy && x - ox < 12 && y - oy < 10 {
                content.get(x - ox, y - oy)
            } else {
                0.0
            }
        })
        .unwrap()
    };
    let a = ScaleVector4::new([2.2, 1.1, 3.4, 2.9]).unwrap();
    let opts = FilterOptions::default();
    let base = filter_constant(&place(6, 6), &a, &opts).unwrap();
    let moved = filter_constant(&place(11, 9), &a, &opts).unwrap();
    let valid = base.valid_region().unwrap();
    for (x, y) in valid.pixels() {
        if x + 5 < w && y + 3 < h && valid.contains(x + 5, y + 3) {
            assert!((base.get(x, y) - moved.get(x + 5, y + 3)).abs() < 1e-12);
        }
    }
}

#[test]
fn symmetric_input_gives_symmetric_output() {
    let n = 21;
    let img = Image2D::from_fn(n, n, |x, y| {
        let (dx, dy) = (x as f64 - 10.0, y as f64 - 10.0);
        (-(dx * dx + dy * dy) / 30.0).exp()
    })
    .unwrap();
    let map = constant_map(n, n, [2.5, 1.5, 2.5, 1.5]).unwrap();
    let out = reference_filter(&img, &map, 1.0 / 16.0).unwrap();
    let fast = filter(&img, &map).unwrap();
    for y in 0..n {
        for x in 0..n {
            assert!((out.get(x, y) - out.get(n - 1 - x, n - 1 - y)).abs() < 1e-12);
            assert!((fast.get(x, y) - fast.get(n - 1 - x, n - 1 - y)).abs() < 1e-12);
        }
    }
}

#[test]
fn valid_region_is_conservative() {
    let img = Image2D::zeros(20, 16).unwrap();
    let map = constant_map(20, 16, [3.0, 2.0, 1.0, 2.0]).unwrap();
    let out = filter(&img, &map).unwrap();
    let r = out.valid_region().unwrap();
    let (hx, hy) = box4_half_extent([3.0, 2.0, 1.0, 2.0]);
    assert!(r.x0 as f64 >= hx && (20 - r.x1) as f64 >= hx);
    assert!(r.y0 as f64 >= hy && (16 - r.y1) as f64 >= hy);
    assert_ne!(r, Rect::default());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn filter_is_linear(seed in 0u64..10_000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let i1 = random_image(&mut rng, 16, 14);
        let i2 = random_image(&mut rng, 16, 14);
        let map = random_map(&mut rng, 16, 14, 0.5, 6.0);
        let mix = Image2D::new(
            16,
            14,
            i1.samples().iter().zip(i2.samples()).map(|(u, v)| alpha * u + beta * v).collect(),
        )
        .unwrap();
        let f1 = filter(&i1, &map).unwrap();
        let f2 = filter(&i2, &map).unwrap();
        let fm = filter(&mix, &map).unwrap();
        for i in 0..16 * 14 {
            let want = alpha * f1.samples()[i] + beta * f2.samples()[i];
            prop_assert!((fm.samples()[i] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn parallel_equals_sequential(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = random_image(&mut rng, 20, 20);
        let map = random_map(&mut rng, 20, 20, 0.3, 5.0);
        let seq = filter_with(&img, &map, &FilterOptions::sequential()).unwrap();
        let par = filter(&img, &map).unwrap();
        prop_assert_eq!(seq.samples(), par.samples());
    }
}
