//! One-dimensional B-spline machinery.
//!
//! Finite-difference (FD) and running-sum (RS) operators, centered B-splines
//! of arbitrary real scale, cubic interpolation prefiltering and the two-step
//! scale-adaptive filter: a global RS pre-integration followed by a short
//! pointwise localization mask whose length does not depend on the scale.
//!
//! Sequences are zero-extended outside their index range.

use std::ops::Range;

use crate::error::{Error, Result};

/// Smallest scale accepted by the adaptive 1D filter. Mask weights grow like
/// `a^-(n2+1)`.
pub const MIN_SCALE_1D: f64 = 0.1;

/// Pole of the cubic B-spline interpolation filter, `sqrt(3) - 2`.
const CUBIC_POLE: f64 = -0.267_949_192_431_122_7;

/// Zero padding applied around the samples before cubic prefiltering; the
/// coefficient tail decays like `|CUBIC_POLE|^k`.
const CUBIC_PAD: usize = 48;

/// Distance from the sequence ends beyond which the cubic coefficients of a
/// zero-extended sequence no longer feel the boundary (`|CUBIC_POLE|^24 < 1e-13`).
const CUBIC_SETTLE: f64 = 24.0;

const INTEGER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub offset: f64,
    pub weight: f64,
}

/// Scaled finite-difference filter `d[k] = a^-n (-1)^k C(n, k)` at offsets `a k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdFilter1d {
    order: u32,
    scale: f64,
    taps: Vec<Tap>,
}

impl FdFilter1d {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn weight_sum(&self) -> f64 {
        self.taps.iter().map(|t| t.weight).sum()
    }

    /// The integer tap spacing, if the scale is an integer.
    pub fn integer_step(&self) -> Option<usize> {
        integer_value(self.scale)
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn integer_value(a: f64) -> Option<usize> {
    let r = a.round();
    ((a - r).abs() <= INTEGER_TOL && r >= 1.0).then_some(r as usize)
}

fn check_scale(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("scale must be positive and finite, got {a}")))
    }
}

pub fn fd_taps(order: u32, scale: f64) -> Result<FdFilter1d> {
    check_scale(scale)?;
    let norm = scale.powi(-(order as i32));
    let taps = (0..=order)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Tap {
                offset: scale * f64::from(k),
                weight: norm * sign * binomial(order, k),
            }
        })
        .collect();
    Ok(FdFilter1d { order, scale, taps })
}

/// Causal FD filtering: `out[m] = sum_k d[k] seq[m - a k]`, same length as the input.
pub fn apply_fd(seq: &[f64], filter: &FdFilter1d) -> Result<Vec<f64>> {
    let step = filter.integer_step().ok_or(Error::NonIntegerOffset {
        scale: filter.scale,
    })?;
    let out = (0..seq.len())
        .map(|m| {
            filter
                .taps
                .iter()
                .enumerate()
                .filter_map(|(k, tap)| m.checked_sub(k * step).map(|i| tap.weight * seq[i]))
                .sum()
        })
        .collect();
    Ok(out)
}

/// Running-sum filter of integer step `b`, applied `order` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RsFilter1d {
    step: usize,
    order: u32,
}

impl RsFilter1d {
    pub fn new(step: usize, order: u32) -> Result<Self> {
        if step < 1 {
            return Err(Error::Domain("running-sum step must be at least 1".into()));
        }
        if order < 1 {
            return Err(Error::Domain("running-sum order must be at least 1".into()));
        }
        Ok(Self { step, order })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// In-place application of `y[m] = y[m - b] + b x[m]`, zero initial state.
    pub fn apply_in_place(&self, data: &mut [f64]) {
        let b = self.step;
        let gain = b as f64;
        for _ in 0..self.order {
            for m in 0..data.len() {
                let prev = if m >= b { data[m - b] } else { 0.0 };
                data[m] = prev + gain * data[m];
            }
        }
    }
}

pub fn apply_rs(seq: &[f64], b: usize, order: u32) -> Result<Vec<f64>> {
    let filter = RsFilter1d::new(b, order)?;
    let mut out = seq.to_vec();
    filter.apply_in_place(&mut out);
    Ok(out)
}

/// Centered B-spline of degree `n` and scale `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BSpline1d {
    degree: u32,
    scale: f64,
}

impl BSpline1d {
    pub fn new(degree: u32, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(Self { degree, scale })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn half_support(&self) -> f64 {
        0.5 * self.scale * f64::from(self.degree + 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        cardinal_bspline(self.degree, x / self.scale + 0.5 * f64::from(self.degree + 1))
            / self.scale
    }
}

pub fn bspline_eval(degree: u32, scale: f64, x: f64) -> Result<f64> {
    Ok(BSpline1d::new(degree, scale)?.eval(x))
}

/// Unit-scale centered B-spline.
#[inline]
pub(crate) fn bspline_unit(degree: u32, x: f64) -> f64 {
    cardinal_bspline(degree, x + 0.5 * f64::from(degree + 1))
}

/// Cardinal B-spline on knots `0..=n+1` via the Cox-de Boor recurrence, with
/// degree-0 pieces supported on `(j, j+1]`.
fn cardinal_bspline(n: u32, t: f64) -> f64 {
    let n = n as usize;
    if !(t > 0.0 && t <= (n + 1) as f64) {
        return 0.0;
    }
    let mut b = [0.0f64; 16];
    let mut buf;
    let table: &mut [f64] = if n < 16 {
        &mut b[..=n]
    } else {
        buf = vec![0.0; n + 1];
        &mut buf
    };
    for (j, v) in table.iter_mut().enumerate() {
        let j = j as f64;
        *v = if t > j && t <= j + 1.0 { 1.0 } else { 0.0 };
    }
    for d in 1..=n {
        let df = d as f64;
        for j in 0..=(n - d) {
            let jf = j as f64;
            table[j] = ((t - jf) * table[j] + (jf + df + 1.0 - t) * table[j + 1]) / df;
        }
    }
    table[0]
}

/// Evaluates `beta^n_a(x)` through integer-scale B-splines: an `(n+1)`-fold
/// running sum of `beta^n_1` followed by the `(n+1)`-th order FD at scale `a`,
/// shifted by `tau = (a - 1)(n + 1) / 2`.
pub fn bspline_eval_factorized(degree: u32, scale: f64, x: f64) -> Result<f64> {
    let fd = fd_taps(degree + 1, scale)?;
    let tau = 0.5 * (scale - 1.0) * f64::from(degree + 1);
    let half = 0.5 * f64::from(degree + 1);
    // Running sum of order n+1 with unit step has weights C(k + n, n), k >= 0.
    let integrated = |y: f64| -> f64 {
        let lo = (y - half).ceil().max(0.0) as i64;
        let hi = (y + half).floor() as i64;
        (lo..=hi)
            .map(|k| binomial(degree + k as u32, degree) * bspline_unit(degree, y - k as f64))
            .sum()
    };
    Ok(fd
        .taps()
        .iter()
        .map(|tap| tap.weight * integrated(x + tau - tap.offset))
        .sum())
}

/// Supported interpolation model degrees.
fn check_model_degree(n1: u32) -> Result<()> {
    match n1 {
        0 | 1 | 3 => Ok(()),
        _ => Err(Error::UnsupportedDegree {
            degree: n1,
            supported: "0, 1, 3",
        }),
    }
}

fn check_window_degree(n2: u32) -> Result<()> {
    if n2 <= 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree {
            degree: n2,
            supported: "0, 1, 2, 3",
        })
    }
}

/// B-spline interpolation coefficients of degree `n1` for zero-extended samples.
///
/// Degrees 0 and 1 interpolate directly; degree 3 runs the causal/anti-causal
/// recursive inverse of `(1, 4, 1) / 6`, initialized for zero extension.
pub fn interp_prefilter(samples: &[f64], n1: u32) -> Result<Vec<f64>> {
    check_model_degree(n1)?;
    if n1 <= 1 {
        return Ok(samples.to_vec());
    }
    let padded = cubic_coefficients(samples, 0, 0);
    Ok(padded)
}

/// Cubic coefficients on the index range `[-pad_left, len + pad_right)`.
fn cubic_coefficients(samples: &[f64], pad_left: usize, pad_right: usize) -> Vec<f64> {
    let mut c = vec![0.0; pad_left + samples.len() + pad_right];
    c[pad_left..pad_left + samples.len()].copy_from_slice(samples);
    if c.is_empty() {
        return c;
    }
    let z = CUBIC_POLE;
    let gain = (1.0 - z) * (1.0 - 1.0 / z);
    let n = c.len();
    c[0] *= gain;
    for k in 1..n {
        c[k] = gain * c[k] + z * c[k - 1];
    }
    // Anti-causal start for an input that is zero past the end.
    c[n - 1] *= z / (z * z - 1.0);
    for k in (0..n - 1).rev() {
        c[k] = z * (c[k + 1] - c[k]);
    }
    c
}

/// FIR localization mask of the adaptive step, stored as sparse integer taps.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationMask {
    taps: Vec<(i64, f64)>,
    shift: f64,
}

impl LocalizationMask {
    /// Taps `(j, w[j])`, sorted by `j`, zero taps removed.
    pub fn taps(&self) -> &[(i64, f64)] {
        &self.taps
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// `w[j] = sum_i d^{n2+1}_a[i] beta^{n1+n2+1}(j + tau - a i)`.
///
/// The taps form `n2 + 2` clusters of at most `n1 + n2 + 2` points, whatever
/// the scale.
pub fn localization_mask_1d(n1: u32, n2: u32, a: f64) -> Result<LocalizationMask> {
    check_model_degree(n1)?;
    check_window_degree(n2)?;
    if !(a.is_finite() && a >= MIN_SCALE_1D) {
        return Err(Error::InvalidScale {
            value: a,
            min: MIN_SCALE_1D,
        });
    }
    let degree = n1 + n2 + 1;
    let half = 0.5 * f64::from(degree + 1);
    let tau = 0.5 * (a - 1.0) * f64::from(n2 + 1);
    let fd = fd_taps(n2 + 1, a)?;

    let mut taps: Vec<(i64, f64)> = Vec::with_capacity(((n2 + 2) * (degree + 1)) as usize);
    for tap in fd.taps() {
        let center = tap.offset - tau;
        let lo = (center - half).floor() as i64;
        let hi = (center + half).ceil() as i64;
        for j in lo..=hi {
            let v = bspline_unit(degree, j as f64 - center);
            if v != 0.0 {
                taps.push((j, tap.weight * v));
            }
        }
    }
    taps.sort_by_key(|&(j, _)| j);
    let mut merged: Vec<(i64, f64)> = Vec::with_capacity(taps.len());
    for (j, w) in taps {
        match merged.last_mut() {
            Some(last) if last.0 == j => last.1 += w,
            _ => merged.push((j, w)),
        }
    }
    merged.retain(|&(_, w)| w != 0.0);
    Ok(LocalizationMask { taps: merged, shift: tau })
}

/// Output of the adaptive 1D filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered1d {
    pub values: Vec<f64>,
    /// Samples whose effective kernel support lies inside the input domain
    /// for every scale up to the map maximum. For the cubic model the range
    /// is further shrunk until the prefilter has settled.
    pub valid: Range<usize>,
}

/// Two-step scale-adaptive filter: `s[m] = <f, beta^{n2}_{a[m]}(. - m)>` where
/// `f` is the degree-`n1` spline interpolating the samples.
pub fn adaptive_filter_1d(samples: &[f64], n1: u32, n2: u32, scales: &[f64]) -> Result<Filtered1d> {
    check_model_degree(n1)?;
    check_window_degree(n2)?;
    if scales.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: (samples.len(), 1),
            actual: (scales.len(), 1),
        });
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let len = samples.len();
    if len == 0 {
        return Ok(Filtered1d {
            values: Vec::new(),
            valid: 0..0,
        });
    }

    let masks = scales
        .iter()
        .map(|&a| localization_mask_1d(n1, n2, a))
        .collect::<Result<Vec<_>>>()?;

    // Index range of the pre-integrated sequence touched by any mask.
    let pad = if n1 == 3 { CUBIC_PAD as i64 } else { 0 };
    let mut lo = -pad;
    let mut hi = len as i64 - 1 + pad;
    for (m, mask) in masks.iter().enumerate() {
        if let (Some(first), Some(last)) = (mask.taps.first(), mask.taps.last()) {
            lo = lo.min(m as i64 - last.0);
            hi = hi.max(m as i64 - first.0);
        }
    }
    let origin = (-lo) as usize;
    let span = (hi - lo + 1) as usize;

    let mut g = if n1 == 3 {
        cubic_coefficients(samples, origin, span - origin - len)
    } else {
        let mut c = vec![0.0; span];
        c[origin..origin + len].copy_from_slice(samples);
        c
    };
    RsFilter1d::new(1, n2 + 1)?.apply_in_place(&mut g);

    let values = masks
        .iter()
        .enumerate()
        .map(|(m, mask)| {
            mask.taps
                .iter()
                .map(|&(j, w)| w * g[(m as i64 - j - lo) as usize])
                .sum()
        })
        .collect();

    let max_a = scales.iter().cloned().fold(0.0, f64::max);
    let settle = if n1 == 3 { CUBIC_SETTLE } else { 0.0 };
    let reach = 0.5 * f64::from(n1 + 1) + 0.5 * max_a * f64::from(n2 + 1) + settle;
    let first = (reach - 1.0).ceil().max(0.0) as usize;
    let last = (len as f64 - reach).floor();
    let valid = if last < first as f64 {
        0..0
    } else {
        first..(last as usize + 1).min(len)
    };
    Ok(Filtered1d { values, valid })
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact up to degree 7.
const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

/// Quadrature evaluation of `<f, beta^{n2}_a(. - m)>` for the degree-`n1`
/// interpolating spline of the samples.
///
/// Panels of width at most `step` are aligned to every knot of both factors,
/// so each panel integrates a polynomial of degree `n1 + n2` with a 4-point
/// Gauss rule; the result is exact up to rounding. Cubic coefficients come
/// from the explicit impulse response `sqrt(3) z^|k|` rather than the
/// recursive prefilter.
pub fn bspline_projection_direct(
    samples: &[f64],
    n1: u32,
    n2: u32,
    a: f64,
    m: f64,
    step: f64,
) -> Result<f64> {
    check_model_degree(n1)?;
    check_window_degree(n2)?;
    check_scale(a)?;
    if !(step > 0.0 && step <= 1.0 / 64.0) {
        return Err(Error::Domain(format!("quadrature step must be in (0, 1/64], got {step}")));
    }
    let window = BSpline1d::new(n2, a)?;
    let half = window.half_support();
    let (x0, x1) = (m - half, m + half);

    let coeff = |k: i64| -> f64 {
        if n1 <= 1 {
            if k >= 0 && (k as usize) < samples.len() {
                samples[k as usize]
            } else {
                0.0
            }
        } else {
            let rho = 3.0f64.sqrt();
            samples
                .iter()
                .enumerate()
                .map(|(j, &f)| f * rho * CUBIC_POLE.powi((k - j as i64).unsigned_abs() as i32))
                .sum()
        }
    };
    let model_half = 0.5 * f64::from(n1 + 1);
    let k_lo = (x0 - model_half).floor() as i64;
    let k_hi = (x1 + model_half).ceil() as i64;
    let coeffs: Vec<(i64, f64)> = (k_lo..=k_hi).map(|k| (k, coeff(k))).collect();
    let model = |x: f64| -> f64 {
        coeffs
            .iter()
            .map(|&(k, c)| c * bspline_unit(n1, x - k as f64))
            .sum()
    };

    let mut knots: Vec<f64> = (0..=n2 + 1).map(|i| x0 + a * f64::from(i)).collect();
    let offset = if n1 % 2 == 0 { 0.5 } else { 0.0 };
    let mut t = (x0 - offset).ceil() + offset;
    while t < x1 {
        knots.push(t);
        t += 1.0;
    }
    knots.sort_by(|p, q| p.total_cmp(q));
    knots.dedup_by(|p, q| (*p - *q).abs() < 1e-14);

    let mut total = 0.0;
    for w in knots.windows(2) {
        let (l, r) = (w[0], w[1]);
        if r <= l {
            continue;
        }
        let pieces = ((r - l) / step).ceil().max(1.0) as usize;
        let hlen = (r - l) / pieces as f64;
        for p in 0..pieces {
            let pl = l + hlen * p as f64;
            let mid = pl + 0.5 * hlen;
            for &(node, weight) in &GAUSS4 {
                let x = mid + 0.5 * hlen * node;
                total += 0.5 * hlen * weight * model(x) * window.eval(x - m);
            }
        }
    }
    Ok(total)
}
