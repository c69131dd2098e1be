//! Radially-uniform box splines.
//!
//! A box spline of order `N` is the convolution of `N` line-segment kernels
//! of lengths `a_k` at the angles `k * pi / N`. Its covariance is controlled
//! by the scale vector, and with equal scales it tends to a Gaussian as `N`
//! grows.
//!
//! The four-direction member with scales `(1, sqrt 2, 1, sqrt 2)` is the
//! Zwart-Powell (ZP) element and has an exact closed form ([`zp_eval`]).
//! Other members are rasterized numerically ([`kernel_grid_eval`]).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// Smallest admissible scale component.
pub const A_MIN: f64 = 0.1;

/// Half-width of the ZP support square; the octagon lies inside `[-1.5, 1.5]^2`.
pub const ZP_RADIUS: f64 = 1.5;

/// Default cap on the number of cells in a rasterized kernel.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;

/// Per-direction scales `(a1, a2, a3, a4)` of a four-direction box spline,
/// for the directions `(1,0)`, `(1,1)/sqrt 2`, `(0,1)` and `(-1,1)/sqrt 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleVector4([f64; 4]);

impl ScaleVector4 {
    /// Scales of the ZP element, which tie the running sums to the pixel lattice.
    pub const ZP: ScaleVector4 = ScaleVector4([1.0, SQRT_2, 1.0, SQRT_2]);

    pub fn new(scales: [f64; 4]) -> Result<Self> {
        for &value in &scales {
            if !(value.is_finite() && value >= A_MIN) {
                return Err(Error::InvalidScale { value, min: A_MIN });
            }
        }
        Ok(Self(scales))
    }

    pub fn uniform(value: f64) -> Result<Self> {
        Self::new([value; 4])
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }

    /// Mesh weight magnitude `1 / (a1 a2 a3 a4)`.
    pub fn alpha(&self) -> f64 {
        1.0 / self.0.iter().product::<f64>()
    }

    /// Half-widths of the kernel support along x and y.
    pub fn half_extent(&self) -> (f64, f64) {
        let [a1, a2, a3, a4] = self.0;
        let diag = (a2 + a4) * FRAC_1_SQRT_2;
        (0.5 * (a1 + diag), 0.5 * (a3 + diag))
    }

    pub fn componentwise_max(&self, other: &Self) -> Self {
        let mut out = self.0;
        for (o, v) in out.iter_mut().zip(other.0) {
            *o = o.max(v);
        }
        Self(out)
    }

    pub fn covariance(&self) -> Covariance2 {
        let [p, q, r, t] = self.0.map(|a| a * a / 12.0);
        Covariance2 {
            xx: p + 0.5 * (q + t),
            xy: 0.5 * (q - t),
            yy: r + 0.5 * (q + t),
        }
    }
}

impl TryFrom<[f64; 4]> for ScaleVector4 {
    type Error = Error;

    fn try_from(value: [f64; 4]) -> Result<Self> {
        Self::new(value)
    }
}

/// Symmetric 2x2 second-moment matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Covariance2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn isotropic(variance: f64) -> Self {
        Self::new(variance, 0.0, variance)
    }

    /// `R(theta) diag(s1^2, s2^2) R(theta)^T`.
    pub fn from_ellipse(sigma_major: f64, sigma_minor: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (v1, v2) = (sigma_major * sigma_major, sigma_minor * sigma_minor);
        Self {
            xx: c * c * v1 + s * s * v2,
            xy: c * s * (v1 - v2),
            yy: s * s * v1 + c * c * v2,
        }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.xx - other.xx)
            .abs()
            .max((self.xy - other.xy).abs())
            .max((self.yy - other.yy).abs())
    }
}

/// Radially-uniform box spline with `N = scales.len()` directions.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBoxSpline {
    scales: Vec<f64>,
}

impl RadialBoxSpline {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        if scales.len() < 2 {
            return Err(Error::Domain(format!(
                "a box spline needs at least 2 directions, got {}",
                scales.len()
            )));
        }
        if let Some(&bad) = scales.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidScale { value: bad, min: 0.0 });
        }
        Ok(Self { scales })
    }

    pub fn four(scales: ScaleVector4) -> Self {
        Self {
            scales: scales.components().to_vec(),
        }
    }

    pub fn order(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn angle(&self, k: usize) -> f64 {
        k as f64 * PI / self.order() as f64
    }

    pub fn direction(&self, k: usize) -> [f64; 2] {
        direction(self.order(), k)
    }

    pub fn covariance(&self) -> Covariance2 {
        let mut c = Covariance2::new(0.0, 0.0, 0.0);
        for (k, &a) in self.scales.iter().enumerate() {
            let [rx, ry] = self.direction(k);
            let v = a * a / 12.0;
            c.xx += v * rx * rx;
            c.xy += v * rx * ry;
            c.yy += v * ry * ry;
        }
        c
    }

    /// Half-widths of the support along x and y.
    pub fn half_extent(&self) -> (f64, f64) {
        self.scales
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(hx, hy), (k, &a)| {
                let [rx, ry] = self.direction(k);
                (hx + 0.5 * a * rx.abs(), hy + 0.5 * a * ry.abs())
            })
    }
}

/// Unit direction of the `k`-th of `n` uniformly spread angles. Angles that
/// are multiples of 45 degrees are returned exactly.
pub fn direction(n: usize, k: usize) -> [f64; 2] {
    match lattice_step(n, k) {
        Some((sx, sy)) => {
            let norm = if sx != 0 && sy != 0 { FRAC_1_SQRT_2 } else { 1.0 };
            [sx as f64 * norm, sy as f64 * norm]
        }
        None => {
            let (s, c) = (k as f64 * PI / n as f64).sin_cos();
            [c, s]
        }
    }
}

/// Integer lattice step parallel to the `k`-th direction, when the angle is a
/// multiple of 45 degrees.
fn lattice_step(n: usize, k: usize) -> Option<(i64, i64)> {
    // angle / 45deg = 4k / n
    if (4 * k) % n != 0 {
        return None;
    }
    match (4 * k / n) % 4 {
        0 => Some((1, 0)),
        1 => Some((1, 1)),
        2 => Some((0, 1)),
        _ => Some((-1, 1)),
    }
}

pub fn covariance(scales: &[f64]) -> Result<Covariance2> {
    Ok(RadialBoxSpline::new(scales.to_vec())?.covariance())
}

/// Exact value of the unit-integral ZP element `beta^4_(1, sqrt 2, 1, sqrt 2)`.
///
/// A piecewise quadratic on the three-direction mesh cut by the lines
/// `x, y in Z + 1/2` and `x +- y in Z`; evaluated after folding into the
/// sector `x >= y >= 0`.
pub fn zp_eval(x: f64, y: f64) -> f64 {
    let (ax, ay) = (x.abs(), y.abs());
    let (x, y) = if ax >= ay { (ax, ay) } else { (ay, ax) };
    if x >= ZP_RADIUS {
        return 0.0;
    }
    if x < 0.5 {
        return 0.5 - 0.5 * x * x - 0.5 * y * y;
    }
    if y < 0.5 {
        let u = x - 1.0;
        if y >= u.abs() {
            0.875 - x - 0.5 * y + 0.25 * x * x + 0.5 * x * y - 0.25 * y * y
        } else if u >= 0.0 {
            let d = x - 1.5;
            0.5 * d * d
        } else {
            0.625 - 0.5 * x - 0.5 * y * y
        }
    } else {
        let s = 2.0 - x - y;
        if s > 0.0 {
            0.25 * s * s
        } else {
            0.0
        }
    }
}

/// Rasterized kernel on a square grid of step `h`, centered on a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    step: f64,
    width: usize,
    height: usize,
    center: (usize, usize),
    values: Vec<f64>,
}

impl KernelGrid {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Index of the cell holding the origin.
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    /// Row-major kernel values (density, not cell mass).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the cell `(i, j)` relative to the origin; zero off the grid.
    pub fn value(&self, i: i64, j: i64) -> f64 {
        let x = self.center.0 as i64 + i;
        let y = self.center.1 as i64 + j;
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return 0.0;
        }
        self.values[y as usize * self.width + x as usize]
    }

    /// Value at the integer point `(x, y)`; requires `1 / h` to be an integer.
    pub fn at_lattice(&self, x: i64, y: i64) -> Result<f64> {
        let r = subdivisions(self.step)?;
        Ok(self.value(x * r, y * r))
    }

    /// Position of the cell `(i, j)` relative to the origin.
    pub fn position(&self, i: i64, j: i64) -> [f64; 2] {
        [i as f64 * self.step, j as f64 * self.step]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step * self.step
    }

    /// Numeric second moments about the origin.
    pub fn second_moments(&self) -> Covariance2 {
        let mut c = Covariance2::new(0.0, 0.0, 0.0);
        let mut mass = 0.0;
        for (idx, &v) in self.values.iter().enumerate() {
            let x = (idx % self.width) as f64 - self.center.0 as f64;
            let y = (idx / self.width) as f64 - self.center.1 as f64;
            mass += v;
            c.xx += v * x * x;
            c.xy += v * x * y;
            c.yy += v * y * y;
        }
        let s = self.step * self.step / mass;
        Covariance2::new(c.xx * s, c.xy * s, c.yy * s)
    }

    /// Largest `|K(x) - K(-x)|` over the grid.
    pub fn max_asymmetry(&self) -> f64 {
        let (cx, cy) = (self.center.0 as i64, self.center.1 as i64);
        let mut worst = 0.0f64;
        for j in 0..self.height as i64 {
            for i in 0..self.width as i64 {
                let v = self.values[(j as usize) * self.width + i as usize];
                worst = worst.max((v - self.value(cx - i, cy - j)).abs());
            }
        }
        worst
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn subdivisions(h: f64) -> Result<i64> {
    let r = (1.0 / h).round();
    if (1.0 / h - r).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "lattice sampling needs 1/h to be an integer, got h = {h}"
        )));
    }
    Ok(r as i64)
}

fn check_resolution(h: f64, max: f64) -> Result<()> {
    if h > 0.0 && h <= max {
        Ok(())
    } else {
        Err(Error::Domain(format!("grid step must be in (0, {max}], got {h}")))
    }
}

/// Cell masses of a centered segment of length `a` (density `1/a`) on a 1D
/// grid of spacing `s`, splatted with quadratic Lagrange weights around the
/// nearest grid point. Mass, mean and variance are reproduced exactly.
/// Returns `(offset, masses)` with index `i` at grid point `i - offset`.
fn segment_masses(a: f64, s: f64) -> (i64, Vec<f64>) {
    let half = 0.5 * a / s;
    let cmin = (-half + 0.5).floor() as i64;
    let cmax = (half + 0.5).floor() as i64;
    let n = cmax.max(-cmin) + 1;
    let mut m = vec![0.0; (2 * n + 1) as usize];
    let density = 1.0 / (2.0 * half);
    for c in cmin..=cmax {
        let lo = (-half).max(c as f64 - 0.5) - c as f64;
        let hi = half.min(c as f64 + 0.5) - c as f64;
        if hi <= lo {
            continue;
        }
        let i0 = hi - lo;
        let i1 = 0.5 * (hi * hi - lo * lo);
        let i2 = (hi * hi * hi - lo * lo * lo) / 3.0;
        let k = (c + n) as usize;
        m[k - 1] += density * 0.5 * (i2 - i1);
        m[k] += density * (i0 - i2);
        m[k + 1] += density * 0.5 * (i2 + i1);
    }
    (n, m)
}

/// Sparse cell-mass kernel of one line segment, in grid cells.
fn line_kernel(n: usize, k: usize, a: f64, h: f64) -> Vec<(i64, i64, f64)> {
    if let Some((sx, sy)) = lattice_step(n, k) {
        let spacing = if sx != 0 && sy != 0 { h * SQRT_2 } else { h };
        let (off, m) = segment_masses(a, spacing);
        return m
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| {
                let t = i as i64 - off;
                (t * sx, t * sy, w)
            })
            .collect();
    }
    // Off-lattice directions: midpoint samples along the segment, each
    // splatted biquadratically (moments up to second order preserved).
    let [rx, ry] = direction(n, k);
    let count = (8.0 * a / h).ceil().max(1.0) as usize;
    let mut cells: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    let w = 1.0 / count as f64;
    for i in 0..count {
        let t = a * ((i as f64 + 0.5) / count as f64 - 0.5);
        let (px, py) = (t * rx / h, t * ry / h);
        let (cx, cy) = (px.round(), py.round());
        let lx = lagrange3(px - cx);
        let ly = lagrange3(py - cy);
        for (dy, wy) in (-1..=1).zip(ly) {
            for (dx, wx) in (-1..=1).zip(lx) {
                *cells.entry((cx as i64 + dx, cy as i64 + dy)).or_insert(0.0) += w * wx * wy;
            }
        }
    }
    cells.into_iter().map(|((x, y), v)| (x, y, v)).collect()
}

fn lagrange3(u: f64) -> [f64; 3] {
    [0.5 * u * (u - 1.0), 1.0 - u * u, 0.5 * u * (u + 1.0)]
}

/// Rasterizes `beta^N_a` on a grid of step `h` by successive convolution of
/// the directional segment kernels.
///
/// Quadratic splatting rings slightly (about 1e-4 of the peak); negative
/// values are clamped to zero afterwards.
pub fn kernel_grid_eval(spline: &RadialBoxSpline, h: f64) -> Result<KernelGrid> {
    kernel_grid_eval_with_budget(spline, h, DEFAULT_CELL_BUDGET)
}

pub fn kernel_grid_eval_with_budget(
    spline: &RadialBoxSpline,
    h: f64,
    budget: usize,
) -> Result<KernelGrid> {
    check_resolution(h, 0.125)?;
    let n = spline.order();
    let (hx, hy) = spline.half_extent();
    let est_w = 2 * ((hx / h).ceil() as usize + 2 * n) + 1;
    let est_h = 2 * ((hy / h).ceil() as usize + 2 * n) + 1;
    let requested = est_w.saturating_mul(est_h);
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }

    let mut grid = KernelGrid {
        step: h,
        width: 1,
        height: 1,
        center: (0, 0),
        values: vec![1.0],
    };
    for (k, &a) in spline.scales().iter().enumerate() {
        let kernel = line_kernel(n, k, a, h);
        grid = convolve_sparse(&grid, &kernel);
    }
    let inv_area = 1.0 / (h * h);
    for v in grid.values.iter_mut() {
        *v = v.max(0.0) * inv_area;
    }
    Ok(grid)
}

fn convolve_sparse(grid: &KernelGrid, kernel: &[(i64, i64, f64)]) -> KernelGrid {
    let min_dx = kernel.iter().map(|e| e.0).min().unwrap_or(0);
    let max_dx = kernel.iter().map(|e| e.0).max().unwrap_or(0);
    let min_dy = kernel.iter().map(|e| e.1).min().unwrap_or(0);
    let max_dy = kernel.iter().map(|e| e.1).max().unwrap_or(0);
    let width = grid.width + (max_dx - min_dx) as usize;
    let height = grid.height + (max_dy - min_dy) as usize;
    let mut values = vec![0.0; width * height];
    for &(dx, dy, w) in kernel {
        let ox = (dx - min_dx) as usize;
        let oy = (dy - min_dy) as usize;
        for y in 0..grid.height {
            let src = &grid.values[y * grid.width..(y + 1) * grid.width];
            let start = (y + oy) * width + ox;
            let dst = &mut values[start..start + grid.width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    KernelGrid {
        step: grid.step,
        width,
        height,
        center: (
            grid.center.0 + (-min_dx) as usize,
            grid.center.1 + (-min_dy) as usize,
        ),
        values,
    }
}

/// Samples of the rasterized four-direction kernel at integer points only.
///
/// Matches [`kernel_grid_eval`] at lattice points (up to rounding) without
/// building the full fine grid: the axis-aligned and diagonal masses are
/// combined along the two anti-diagonal lines through each lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeKernel {
    radius: (i64, i64),
    values: Vec<f64>,
}

impl LatticeKernel {
    pub fn new(scales: ScaleVector4, h: f64) -> Result<Self> {
        check_resolution(h, 0.125)?;
        let r = subdivisions(h)?;
        let [a1, a2, a3, a4] = scales.components();
        let (n1, m1) = segment_masses(a1, h);
        let (n2, m2) = segment_masses(a2, h * SQRT_2);
        let (n3, m3) = segment_masses(a3, h);
        let (n4, m4) = segment_masses(a4, h * SQRT_2);

        let at = |m: &[f64], n: i64, i: i64| -> f64 {
            if i < -n || i > n {
                0.0
            } else {
                m[(i + n) as usize]
            }
        };
        // Axis-aligned rectangle smeared along (1,1).
        let q = |x: i64, y: i64| -> f64 {
            let lo = (-n2).max(x - n1).max(y - n3);
            let hi = n2.min(x + n1).min(y + n3);
            (lo..=hi)
                .map(|t| m2[(t + n2) as usize] * at(&m1, n1, x - t) * at(&m3, n3, y - t))
                .sum()
        };

        let (hx, hy) = scales.half_extent();
        let radius = (hx.ceil() as i64 + 1, hy.ceil() as i64 + 1);
        let inv_area = 1.0 / (h * h);
        let mut values = Vec::with_capacity(((2 * radius.0 + 1) * (2 * radius.1 + 1)) as usize);
        for j in -radius.1..=radius.1 {
            for i in -radius.0..=radius.0 {
                let (x, y) = (i * r, j * r);
                let v: f64 = (-n4..=n4)
                    .map(|t| m4[(t + n4) as usize] * q(x + t, y - t))
                    .sum();
                values.push(v.max(0.0) * inv_area);
            }
        }
        Ok(Self { radius, values })
    }

    /// Half-size of the sampled window, in pixels, along x and y.
    pub fn radius(&self) -> (i64, i64) {
        self.radius
    }

    /// Kernel value at the integer offset `(dx, dy)`; zero outside the window.
    pub fn get(&self, dx: i64, dy: i64) -> f64 {
        let (rx, ry) = self.radius;
        if dx.abs() > rx || dy.abs() > ry {
            return 0.0;
        }
        self.values[((dy + ry) * (2 * rx + 1) + dx + rx) as usize]
    }
}

/// Result of inverting a covariance into four-direction scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFit {
    pub scales: ScaleVector4,
    /// Some component fell below `a_min` and was raised to it, so the
    /// achieved covariance only approximates the target.
    pub clamped: bool,
}

/// Four-direction scales whose box spline has covariance `c`.
///
/// With `p, q, r, t = a_k^2 / 12` the moment equations are
/// `Cxx = p + (q+t)/2`, `Cyy = r + (q+t)/2`, `Cxy = (q-t)/2`. The free sum
/// `S = q + t` is set to `(Cxx + Cyy)/2`, clamped to the interval where all
/// four moments stay at or above `a_min^2 / 12`; when that interval is empty
/// it falls back to `[2|Cxy|, 2 min(Cxx, Cyy)]` and the short scales are
/// raised to `a_min`.
pub fn scales_from_covariance(c: &Covariance2, a_min: f64) -> Result<ScaleFit> {
    if !(a_min.is_finite() && a_min >= A_MIN) {
        return Err(Error::InvalidScale {
            value: a_min,
            min: A_MIN,
        });
    }
    if !(c.xx.is_finite() && c.yy.is_finite() && c.xy.is_finite())
        || c.xx <= 0.0
        || c.yy <= 0.0
        || c.det() <= 0.0
    {
        return Err(Error::DegenerateCovariance);
    }
    let limit = c.xx.min(c.yy);
    if c.xy.abs() > limit * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            cxy: c.xy,
            max_abs_cxy: limit,
        });
    }
    let xy = c.xy.clamp(-limit, limit);
    // Keep every moment at or above that of a_min when the shape allows it.
    let floor = a_min * a_min / 12.0;
    let (lo, hi) = if xy.abs() + floor <= limit - floor {
        (2.0 * (xy.abs() + floor), 2.0 * (limit - floor))
    } else {
        (2.0 * xy.abs(), 2.0 * limit)
    };
    let s = (0.5 * (c.xx + c.yy)).clamp(lo, hi);
    let moments = [c.xx - 0.5 * s, 0.5 * s + xy, c.yy - 0.5 * s, 0.5 * s - xy];
    let mut clamped = false;
    let scales = moments.map(|v| {
        let a = (12.0 * v.max(0.0)).sqrt();
        if a < a_min * (1.0 - 1e-9) {
            clamped = true;
        }
        a.max(a_min)
    });
    Ok(ScaleFit {
        scales: ScaleVector4::new(scales)?,
        clamped,
    })
}

/// Equal scales `sigma sqrt(24 / N)`, whose box spline has covariance
/// `sigma^2 I` for every `N`.
pub fn gaussian_limit_scales(n: usize, sigma: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!("order must be at least 2, got {n}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(vec![sigma * (24.0 / n as f64).sqrt(); n])
}

/// Maximum absolute difference between the rasterized `beta^N` with
/// Gaussian-limit scales and the isotropic Gaussian of deviation `sigma`,
/// over the grid of step `h`.
pub fn gaussian_distance(n: usize, sigma: f64, h: f64) -> Result<f64> {
    check_resolution(h, 1.0 / 16.0)?;
    let spline = RadialBoxSpline::new(gaussian_limit_scales(n, sigma)?)?;
    let grid = kernel_grid_eval(&spline, h)?;
    let norm = 1.0 / (2.0 * PI * sigma * sigma);
    let inv = 1.0 / (2.0 * sigma * sigma);
    let (cx, cy) = grid.center();
    let mut worst = 0.0f64;
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            let [x, y] = grid.position(i as i64 - cx as i64, j as i64 - cy as i64);
            let g = norm * (-(x * x + y * y) * inv).exp();
            worst = worst.max((grid.values()[j * grid.width() + i] - g).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zp_basic_values() {
        assert_eq!(zp_eval(2.0, 0.0), 0.0);
        assert_eq!(zp_eval(0.0, 0.0), 0.5);
        assert_eq!(zp_eval(1.5, 0.0), 0.0);
        assert_eq!(zp_eval(1.0, 1.0), 0.0);
        assert_eq!(zp_eval(0.3, -0.7), zp_eval(-0.3, 0.7));
        assert_eq!(zp_eval(0.3, -0.7), zp_eval(0.7, 0.3));
    }

    #[test]
    fn zp_is_continuous_across_knot_lines() {
        let eps = 1e-9;
        for i in 0..=60 {
            let t = -1.5 + 3.0 * i as f64 / 60.0;
            for &k in &[-0.5, 0.5, 1.5] {
                assert!((zp_eval(k - eps, t) - zp_eval(k + eps, t)).abs() < 1e-8);
                assert!((zp_eval(t, k - eps) - zp_eval(t, k + eps)).abs() < 1e-8);
            }
            for &k in &[-1.0, 0.0, 1.0] {
                let (x, y) = (t, t + k);
                assert!((zp_eval(x - eps, y) - zp_eval(x + eps, y)).abs() < 1e-8);
                let (x, y) = (t, -t + k);
                assert!((zp_eval(x - eps, y) - zp_eval(x + eps, y)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn covariance_examples() {
        let zp = ScaleVector4::ZP.covariance();
        assert!(zp.max_abs_diff(&Covariance2::isotropic(0.25)) < 1e-15);
        let c = covariance(&[3.0; 4]).unwrap();
        assert!(c.max_abs_diff(&Covariance2::isotropic(1.5)) < 1e-14);
        let c = covariance(&[2.0, 5.0]).unwrap();
        assert!(c.max_abs_diff(&Covariance2::new(4.0 / 12.0, 0.0, 25.0 / 12.0)) < 1e-15);
        let radial = RadialBoxSpline::four(ScaleVector4::new([1.0, 2.0, 3.0, 4.0]).unwrap());
        let direct = ScaleVector4::new([1.0, 2.0, 3.0, 4.0]).unwrap().covariance();
        assert!(radial.covariance().max_abs_diff(&direct) < 1e-14);
    }

    #[test]
    fn inversion_examples() {
        let fit = scales_from_covariance(&Covariance2::isotropic(0.25), A_MIN).unwrap();
        for a in fit.scales.components() {
            assert!((a - 1.5f64.sqrt()).abs() < 1e-12);
        }
        assert!(!fit.clamped);
        let fit = scales_from_covariance(&Covariance2::isotropic(1.0), A_MIN).unwrap();
        for a in fit.scales.components() {
            assert!((a - 6f64.sqrt()).abs() < 1e-12);
        }
        let err = scales_from_covariance(&Covariance2::new(1.0, 0.2, 0.1), A_MIN).unwrap_err();
        assert_eq!(
            err,
            Error::Infeasible {
                cxy: 0.2,
                max_abs_cxy: 0.1
            }
        );
        assert_eq!(
            scales_from_covariance(&Covariance2::new(1.0, 0.0, 0.0), A_MIN),
            Err(Error::DegenerateCovariance)
        );
        assert!(scales_from_covariance(&Covariance2::isotropic(1.0), 0.01).is_err());
    }

    #[test]
    fn inversion_flags_clamping() {
        // Cxy at the feasibility limit leaves one axis scale at zero.
        let fit = scales_from_covariance(&Covariance2::new(1.0, 0.5, 0.5), A_MIN).unwrap();
        assert!(fit.clamped);
        assert_eq!(fit.scales.components()[2], A_MIN);
    }

    #[test]
    fn thin_but_feasible_shapes_fit_exactly() {
        for c in [
            Covariance2::from_ellipse(3.0, 1.0, 0.0),
            Covariance2::from_ellipse(3.0, 1.0, std::f64::consts::FRAC_PI_4),
            Covariance2::new(4.0, 0.0, 0.01),
        ] {
            let fit = scales_from_covariance(&c, A_MIN).unwrap();
            assert!(!fit.clamped, "{c:?}");
            assert!(fit.scales.covariance().max_abs_diff(&c) < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn gaussian_limit_examples() {
        assert!((gaussian_limit_scales(4, 1.0).unwrap()[0] - 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(gaussian_limit_scales(24, 1.0).unwrap(), vec![1.0; 24]);
        for n in [2, 3, 4, 8] {
            let c = covariance(&gaussian_limit_scales(n, 1.3).unwrap()).unwrap();
            assert!(c.max_abs_diff(&Covariance2::isotropic(1.69)) < 1e-12, "n={n}");
        }
        assert!(gaussian_limit_scales(1, 1.0).is_err());
    }

    #[test]
    fn segment_masses_preserve_moments() {
        for &(a, s) in &[(1.0, 1.0 / 16.0), (2.7, 0.0625), (0.3, 0.0884), (5.0, 0.1)] {
            let (n, m) = segment_masses(a, s);
            let mass: f64 = m.iter().sum();
            let var: f64 = m
                .iter()
                .enumerate()
                .map(|(i, w)| w * ((i as i64 - n) as f64 * s).powi(2))
                .sum();
            assert!((mass - 1.0).abs() < 1e-14);
            assert!((var - a * a / 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rect_rasterization() {
        let grid = kernel_grid_eval(&RadialBoxSpline::new(vec![1.0, 1.0]).unwrap(), 1.0 / 16.0)
            .unwrap();
        for j in -6..=6 {
            for i in -6..=6 {
                assert!((grid.value(i, j) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(grid.value(10, 0), 0.0);
        assert_eq!(grid.value(0, -10), 0.0);
    }

    #[test]
    fn budget_guard() {
        let spline = RadialBoxSpline::new(vec![50.0; 4]).unwrap();
        assert!(matches!(
            kernel_grid_eval_with_budget(&spline, 1.0 / 16.0, 10_000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn lattice_kernel_matches_full_grid() {
        for a in [[1.5, SQRT_2, 3.0, 2.2], [2.0; 4], [1.1, 3.7, 2.4, 1.0]] {
            let sv = ScaleVector4::new(a).unwrap();
            let grid = kernel_grid_eval(&RadialBoxSpline::four(sv), 1.0 / 16.0).unwrap();
            let lat = LatticeKernel::new(sv, 1.0 / 16.0).unwrap();
            let (rx, ry) = lat.radius();
            for j in -ry..=ry {
                for i in -rx..=rx {
                    let g = grid.at_lattice(i, j).unwrap();
                    assert!((g - lat.get(i, j)).abs() < 1e-12, "{a:?} ({i},{j})");
                }
            }
        }
    }
}
