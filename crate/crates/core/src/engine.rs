//! Four-direction elliptical filtering at a fixed cost per pixel.
//!
//! The image is integrated once by running sums along `(1,0)`, `(1,1)`,
//! `(0,1)` and `(-1,1)`, which makes it the coefficient sequence of an
//! expansion in shifted ZP elements. Each output pixel then applies a
//! 16-vertex finite-difference mesh, shaped by that pixel's scale vector, to
//! the ZP interpolant of the integrated image. Every vertex touches a 3x3
//! block of samples, so a pixel costs 144 multiply-adds whatever its scales.
//!
//! The result is the projection `s[m] = sum_k f[k] beta^4_a(m)(k - m)` of the
//! zero-extended image.

use std::f64::consts::SQRT_2;

use crate::boxspline2d::{zp_eval, LatticeKernel, ScaleVector4};
use crate::error::{Error, Result};
use crate::exec::{for_each_row, try_for_each_row, Exec};
use crate::image::{Image2D, Rect};
use crate::ops2d::fd_mesh4;
use crate::scalemap::ScaleMap;

/// Number of ZP samples (and multiply-adds) per output pixel.
pub const TAPS_PER_PIXEL: usize = 144;

/// Default cap on padded cells for pre-integration.
pub const DEFAULT_PREINTEGRATION_BUDGET: usize = 1 << 27;

/// Default cap on fine-grid cells visited by [`reference_filter`].
pub const DEFAULT_REFERENCE_BUDGET: usize = 1 << 34;

/// Zero padding around the image, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Margins {
    pub left: usize,
    pub right: usize,
    pub bottom: usize,
    pub top: usize,
}

impl Margins {
    /// Padding needed by every mesh with scales up to `max_scale`: the mesh
    /// spans the kernel support around `m - (1/2, 3/2)` and each vertex reads a
    /// further ZP neighbourhood. "Bottom" is the low-`y` side.
    pub fn for_scale(max_scale: &ScaleVector4) -> Self {
        let (hx, hy) = max_scale.half_extent();
        Self {
            left: (hx + 2.0).ceil() as usize + 1,
            right: (hx + 1.0).ceil() as usize + 1,
            bottom: (hy + 3.0).ceil() as usize + 1,
            top: hy.ceil() as usize + 1,
        }
    }
}

/// The running-sum passes, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// `F[k1, k2] = f + F[k1 - 1, k2]`
    Horizontal,
    /// `F[k1, k2] = sqrt 2 F + F[k1 - 1, k2 - 1]`
    Diagonal,
    /// `F[k1, k2] = F + F[k1, k2 - 1]`
    Vertical,
    /// `g[k1, k2] = sqrt 2 F + g[k1 + 1, k2 - 1]`
    AntiDiagonal,
}

/// The image after the four running-sum passes, on a zero-padded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PreIntegratedImage {
    width: usize,
    height: usize,
    margins: Margins,
    image_dims: (usize, usize),
    data: Vec<f64>,
}

impl PreIntegratedImage {
    /// Padded width.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Padded height.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn margins(&self) -> Margins {
        self.margins
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.image_dims
    }

    /// The scales `(1, sqrt 2, 1, sqrt 2)` of the integrating box spline.
    pub fn integration_scales(&self) -> ScaleVector4 {
        ScaleVector4::ZP
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Sample at image coordinates `(x, y)`; `None` outside the padded domain.
    pub fn value(&self, x: i64, y: i64) -> Option<f64> {
        let px = x + self.margins.left as i64;
        let py = y + self.margins.bottom as i64;
        if px < 0 || py < 0 || px >= self.width as i64 || py >= self.height as i64 {
            return None;
        }
        Some(self.data[py as usize * self.width + px as usize])
    }
}

/// Tuning knobs of the filtering pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    /// Integrate `f - mean(f)` and add the mean back through the filtered
    /// domain indicator. Keeps the integrated values small on large images.
    pub mean_subtract: bool,
    pub exec: Exec,
    pub cell_budget: usize,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            mean_subtract: true,
            exec: Exec::Parallel,
            cell_budget: DEFAULT_PREINTEGRATION_BUDGET,
        }
    }
}

impl FilterOptions {
    pub fn sequential() -> Self {
        Self {
            exec: Exec::Sequential,
            ..Self::default()
        }
    }
}

fn padded_dims(dims: (usize, usize), margins: &Margins, budget: usize) -> Result<(usize, usize)> {
    let w = margins.left + dims.0 + margins.right;
    let h = margins.bottom + dims.1 + margins.top;
    let requested = w.saturating_mul(h);
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    Ok((w, h))
}

/// Pads `samples(x, y)` and runs the running-sum passes up to `last`.
fn integrate_padded(
    dims: (usize, usize),
    margins: Margins,
    last: Stage,
    exec: Exec,
    budget: usize,
    sample: impl Fn(usize, usize) -> f64 + Sync + Send,
) -> Result<PreIntegratedImage> {
    let (w, h) = padded_dims(dims, &margins, budget)?;
    let mut data = vec![0.0; w * h];
    let (x0, y0) = (margins.left, margins.bottom);

    // Pass 1 is independent per row.
    for_each_row(exec, &mut data, w, |py, row| {
        if py < y0 || py >= y0 + dims.1 {
            return;
        }
        let y = py - y0;
        for x in 0..dims.0 {
            row[x0 + x] = sample(x, y);
        }
        let mut acc = 0.0;
        for v in row[x0..].iter_mut() {
            acc += *v;
            *v = acc;
        }
    });
    if last == Stage::Horizontal {
        return Ok(PreIntegratedImage {
            width: w,
            height: h,
            margins,
            image_dims: dims,
            data,
        });
    }

    // Passes 2-4 read the previous row, so rows are swept in order.
    for y in 0..h {
        let (prev, cur) = data.split_at_mut(y * w);
        let row = &mut cur[..w];
        let prev = if y > 0 { Some(&prev[(y - 1) * w..]) } else { None };
        match prev {
            Some(p) => {
                row[0] *= SQRT_2;
                for x in 1..w {
                    row[x] = SQRT_2 * row[x] + p[x - 1];
                }
            }
            None => row.iter_mut().for_each(|v| *v *= SQRT_2),
        }
    }
    if last >= Stage::Vertical {
        for y in 1..h {
            let (prev, cur) = data.split_at_mut(y * w);
            let p = &prev[(y - 1) * w..];
            for (v, q) in cur[..w].iter_mut().zip(p) {
                *v += q;
            }
        }
    }
    if last == Stage::AntiDiagonal {
        // Entries past the right edge are dropped; the truncation error
        // depends on k1 + k2 only and the (-1, 1) difference of the mesh
        // cancels it.
        for y in 0..h {
            let (prev, cur) = data.split_at_mut(y * w);
            let row = &mut cur[..w];
            if y == 0 {
                row.iter_mut().for_each(|v| *v *= SQRT_2);
                continue;
            }
            let p = &prev[(y - 1) * w..];
            for x in 0..w - 1 {
                row[x] = SQRT_2 * row[x] + p[x + 1];
            }
            row[w - 1] *= SQRT_2;
        }
    }
    Ok(PreIntegratedImage {
        width: w,
        height: h,
        margins,
        image_dims: dims,
        data,
    })
}

/// Integrates `image` for meshes with scales up to `max_scale`.
pub fn preintegrate(image: &Image2D, max_scale: &ScaleVector4) -> Result<PreIntegratedImage> {
    preintegrate_through(image, Margins::for_scale(max_scale), Stage::AntiDiagonal, Exec::Parallel)
}

/// Integration with explicit margins, stopping after the pass `last`.
pub fn preintegrate_through(
    image: &Image2D,
    margins: Margins,
    last: Stage,
    exec: Exec,
) -> Result<PreIntegratedImage> {
    integrate_padded(image.dims(), margins, last, exec, DEFAULT_PREINTEGRATION_BUDGET, |x, y| {
        image.get(x, y)
    })
}

/// ZP interpolant `sum_k g[k] zp(x - k)` at image coordinates `x`.
pub fn zp_interpolate(g: &PreIntegratedImage, x: [f64; 2]) -> Result<f64> {
    let (kx0, kx1) = ((x[0] - 1.5).floor() as i64, (x[0] + 1.5).ceil() as i64);
    let (ky0, ky1) = ((x[1] - 1.5).floor() as i64, (x[1] + 1.5).ceil() as i64);
    let mut acc = 0.0;
    for ky in ky0..=ky1 {
        for kx in kx0..=kx1 {
            let w = zp_eval(x[0] - kx as f64, x[1] - ky as f64);
            if w == 0.0 {
                continue;
            }
            let v = g.value(kx, ky).ok_or(Error::OutOfDomain { x: kx, y: ky })?;
            acc += w * v;
        }
    }
    Ok(acc)
}

/// Operation counts reported by the instrumented localization.
pub trait OpCounter {
    fn kernel_evals(&mut self, n: u64);
    fn mul_adds(&mut self, n: u64);
}

/// Counter that records nothing; used on the production path.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn kernel_evals(&mut self, _: u64) {}
    #[inline(always)]
    fn mul_adds(&mut self, _: u64) {}
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub kernel_evals: u64,
    pub mul_adds: u64,
}

impl OpCounter for OpCount {
    fn kernel_evals(&mut self, n: u64) {
        self.kernel_evals += n;
    }
    fn mul_adds(&mut self, n: u64) {
        self.mul_adds += n;
    }
}

/// The mesh folded with the ZP interpolation: 144 integer offsets relative to
/// the output pixel and their weights.
#[derive(Debug, Clone)]
struct ZpStencil {
    offsets: [(i64, i64); TAPS_PER_PIXEL],
    coeffs: [f64; TAPS_PER_PIXEL],
    min: (i64, i64),
    max: (i64, i64),
}

impl ZpStencil {
    fn new(a: &ScaleVector4, counter: &mut impl OpCounter) -> Self {
        let mesh = fd_mesh4(a);
        let tau = mesh.shift();
        let mut offsets = [(0i64, 0i64); TAPS_PER_PIXEL];
        let mut coeffs = [0.0; TAPS_PER_PIXEL];
        let mut t = 0;
        for v in mesh.vertices() {
            let at = [tau[0] - v.position[0], tau[1] - v.position[1]];
            let base = [at[0].round(), at[1].round()];
            let frac = [at[0] - base[0], at[1] - base[1]];
            for dy in -1..=1 {
                for dx in -1..=1 {
                    counter.kernel_evals(1);
                    offsets[t] = (base[0] as i64 + dx, base[1] as i64 + dy);
                    coeffs[t] = v.weight * zp_eval(frac[0] - dx as f64, frac[1] - dy as f64);
                    t += 1;
                }
            }
        }
        let min = offsets.iter().fold((i64::MAX, i64::MAX), |m, o| (m.0.min(o.0), m.1.min(o.1)));
        let max = offsets.iter().fold((i64::MIN, i64::MIN), |m, o| (m.0.max(o.0), m.1.max(o.1)));
        Self {
            offsets,
            coeffs,
            min,
            max,
        }
    }

    /// Linear index of pixel `m` in `g`, after checking the stencil fits.
    fn origin(&self, g: &PreIntegratedImage, m: (i64, i64)) -> Result<usize> {
        let px = m.0 + g.margins.left as i64;
        let py = m.1 + g.margins.bottom as i64;
        let lo = (px + self.min.0, py + self.min.1);
        let hi = (px + self.max.0, py + self.max.1);
        if lo.0 < 0 || lo.1 < 0 || hi.0 >= g.width as i64 || hi.1 >= g.height as i64 {
            let x = if lo.0 < 0 { m.0 + self.min.0 } else { m.0 + self.max.0 };
            let y = if lo.1 < 0 { m.1 + self.min.1 } else { m.1 + self.max.1 };
            return Err(Error::OutOfDomain { x, y });
        }
        Ok(py as usize * g.width + px as usize)
    }

    fn linear_offsets(&self, width: usize) -> [isize; TAPS_PER_PIXEL] {
        self.offsets
            .map(|(dx, dy)| dy as isize * width as isize + dx as isize)
    }
}

#[inline]
fn apply(
    data: &[f64],
    origin: usize,
    lin: &[isize; TAPS_PER_PIXEL],
    coeffs: &[f64; TAPS_PER_PIXEL],
    counter: &mut impl OpCounter,
) -> f64 {
    let mut acc = 0.0;
    for (c, &o) in coeffs.iter().zip(lin) {
        counter.mul_adds(1);
        acc += c * data[(origin as isize + o) as usize];
    }
    acc
}

/// `s[m]` for a single pixel with scales `a`.
pub fn localize(g: &PreIntegratedImage, m: (i64, i64), a: &ScaleVector4) -> Result<f64> {
    localize_counted(g, m, a, &mut NoCount)
}

/// [`localize`] with operation counting.
pub fn localize_counted(
    g: &PreIntegratedImage,
    m: (i64, i64),
    a: &ScaleVector4,
    counter: &mut impl OpCounter,
) -> Result<f64> {
    let stencil = ZpStencil::new(a, counter);
    let origin = stencil.origin(g, m)?;
    let lin = stencil.linear_offsets(g.width);
    Ok(apply(&g.data, origin, &lin, &stencil.coeffs, counter))
}

/// Pixels whose kernel support lies inside the image for every scale up to `max_scale`.
pub fn valid_region(dims: (usize, usize), max_scale: &ScaleVector4) -> Rect {
    let (hx, hy) = max_scale.half_extent();
    let (rx, ry) = (hx.ceil() as usize, hy.ceil() as usize);
    let rect = Rect::new(rx, ry, dims.0.saturating_sub(rx), dims.1.saturating_sub(ry));
    if rect.is_empty() {
        Rect::default()
    } else {
        rect
    }
}

/// Integrated image pair used by the filters.
struct Prepared {
    signal: PreIntegratedImage,
    /// Integrated domain indicator and the mean it multiplies.
    dc: Option<(PreIntegratedImage, f64)>,
}

fn prepare(image: &Image2D, max_scale: &ScaleVector4, opts: &FilterOptions) -> Result<Prepared> {
    let margins = Margins::for_scale(max_scale);
    let dims = image.dims();
    let integrate = |f: &(dyn Fn(usize, usize) -> f64 + Sync)| {
        integrate_padded(dims, margins, Stage::AntiDiagonal, opts.exec, opts.cell_budget, f)
    };
    if opts.mean_subtract {
        let mean = image.mean();
        let signal = integrate(&|x, y| image.get(x, y) - mean)?;
        let ones = integrate(&|_, _| 1.0)?;
        Ok(Prepared {
            signal,
            dc: Some((ones, mean)),
        })
    } else {
        Ok(Prepared {
            signal: integrate(&|x, y| image.get(x, y))?,
            dc: None,
        })
    }
}

impl Prepared {
    #[inline]
    fn pixel(&self, stencil: &ZpStencil, lin: &[isize; TAPS_PER_PIXEL], m: (i64, i64)) -> Result<f64> {
        let origin = stencil.origin(&self.signal, m)?;
        let v = apply(&self.signal.data, origin, lin, &stencil.coeffs, &mut NoCount);
        Ok(match &self.dc {
            Some((ones, mean)) => {
                v + mean * apply(&ones.data, origin, lin, &stencil.coeffs, &mut NoCount)
            }
            None => v,
        })
    }
}

fn check_dims(image: &Image2D, map: &ScaleMap) -> Result<()> {
    if image.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            actual: map.dims(),
        });
    }
    Ok(())
}

/// Filters `image` with the per-pixel kernels of `map`, using default options.
pub fn filter(image: &Image2D, map: &ScaleMap) -> Result<Image2D> {
    filter_with(image, map, &FilterOptions::default())
}

pub fn filter_with(image: &Image2D, map: &ScaleMap, opts: &FilterOptions) -> Result<Image2D> {
    check_dims(image, map)?;
    let max_scale = map.max_scale();
    let prep = prepare(image, &max_scale, opts)?;
    let (w, h) = image.dims();
    let mut out = vec![0.0; w * h];
    try_for_each_row(opts.exec, &mut out, w, |y, row| {
        for (x, v) in row.iter_mut().enumerate() {
            let stencil = ZpStencil::new(&map.get(x, y), &mut NoCount);
            let lin = stencil.linear_offsets(prep.signal.width);
            *v = prep.pixel(&stencil, &lin, (x as i64, y as i64))?;
        }
        Ok::<(), Error>(())
    })?;
    Ok(Image2D::new(w, h, out)?.with_valid_region(valid_region((w, h), &max_scale)))
}

/// Filters with one kernel everywhere. Bit-identical to [`filter_with`] on a
/// constant map; the stencil is built only once.
pub fn filter_constant(image: &Image2D, a: &ScaleVector4, opts: &FilterOptions) -> Result<Image2D> {
    let prep = prepare(image, a, opts)?;
    let stencil = ZpStencil::new(a, &mut NoCount);
    let lin = stencil.linear_offsets(prep.signal.width);
    let (w, h) = image.dims();
    let mut out = vec![0.0; w * h];
    try_for_each_row(opts.exec, &mut out, w, |y, row| {
        for (x, v) in row.iter_mut().enumerate() {
            *v = prep.pixel(&stencil, &lin, (x as i64, y as i64))?;
        }
        Ok::<(), Error>(())
    })?;
    Ok(Image2D::new(w, h, out)?.with_valid_region(valid_region((w, h), a)))
}

/// Brute-force `s[m] = sum_k f[k] beta^4_a(m)(k - m)` with kernel samples from
/// the rasterized box spline at step `h`. No running sums, meshes or ZP
/// interpolation are involved.
pub fn reference_filter(image: &Image2D, map: &ScaleMap, h: f64) -> Result<Image2D> {
    reference_filter_with(image, map, h, Exec::Parallel, DEFAULT_REFERENCE_BUDGET)
}

pub fn reference_filter_with(
    image: &Image2D,
    map: &ScaleMap,
    h: f64,
    exec: Exec,
    budget: usize,
) -> Result<Image2D> {
    check_dims(image, map)?;
    if !(h > 0.0 && h <= 1.0 / 16.0) {
        return Err(Error::Domain(format!("oracle step must be in (0, 1/16], got {h}")));
    }
    let requested = map.scales().iter().fold(0usize, |acc, a| {
        let (hx, hy) = a.half_extent();
        let cells = ((2.0 * hx / h + 1.0) * (2.0 * hy / h + 1.0)) as usize;
        acc.saturating_add(cells)
    });
    if requested > budget {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let (w, hgt) = image.dims();
    let mut out = vec![0.0; w * hgt];
    try_for_each_row(exec, &mut out, w, |y, row| {
        let mut cache: Option<(ScaleVector4, LatticeKernel)> = None;
        for (x, v) in row.iter_mut().enumerate() {
            let a = map.get(x, y);
            if cache.as_ref().map_or(true, |(c, _)| *c != a) {
                cache = Some((a, LatticeKernel::new(a, h)?));
            }
            let kernel = &cache.as_ref().expect("kernel cached above").1;
            let (rx, ry) = kernel.radius();
            let mut acc = 0.0;
            for dy in -ry..=ry {
                for dx in -rx..=rx {
                    let f = image.get_or_zero(x as i64 + dx, y as i64 + dy);
                    if f != 0.0 {
                        acc += f * kernel.get(dx, dy);
                    }
                }
            }
            *v = acc;
        }
        Ok::<(), Error>(())
    })?;
    Ok(Image2D::new(w, hgt, out)?.with_valid_region(valid_region((w, hgt), &map.max_scale())))
}
