//! Test-only reference evaluators, independent of the library's kernels.
#![allow(dead_code)]

use std::f64::consts::FRAC_1_SQRT_2;

type Pt = (f64, f64);

/// Keeps the part of `poly` where `nx * x + ny * y <= c`.
fn clip(poly: &[Pt], nx: f64, ny: f64, c: f64) -> Vec<Pt> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let fp = nx * p.0 + ny * p.1 - c;
        let fq = nx * q.0 + ny * q.1 - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

fn area(poly: &[Pt]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let (x1, y1) = poly[i];
        let (x2, y2) = poly[(i + 1) % poly.len()];
        s += x1 * y2 - x2 * y1;
    }
    0.5 * s.abs()
}

/// Exact four-direction box spline: the axis rectangle (a1 x a3) convolved
/// with the diagonal rectangle (a2 x a4) is the overlap area of the two
/// sets, divided by the product of the scales.
pub fn exact_box4(a: [f64; 4], x: f64, y: f64) -> f64 {
    let [a1, a2, a3, a4] = a;
    let rect = vec![
        (x - a1 / 2.0, y - a3 / 2.0),
        (x + a1 / 2.0, y - a3 / 2.0),
        (x + a1 / 2.0, y + a3 / 2.0),
        (x - a1 / 2.0, y + a3 / 2.0),
    ];
    let s = FRAC_1_SQRT_2;
    let p = clip(&rect, s, s, a2 / 2.0);
    let p = clip(&p, -s, -s, a2 / 2.0);
    let p = clip(&p, -s, s, a4 / 2.0);
    let p = clip(&p, s, -s, a4 / 2.0);
    area(&p) / (a1 * a2 * a3 * a4)
}

/// Half-extents of the four-direction kernel support.
pub fn box4_half_extent(a: [f64; 4]) -> (f64, f64) {
    let d = (a[1] + a[3]) * FRAC_1_SQRT_2;
    (0.5 * (a[0] + d), 0.5 * (a[2] + d))
}
