//! Per-pixel scale-vector maps: construction, validation and the SVM4 file
//! format.
//!
//! SVM4 layout: the bytes `SVM4`, width and height as little-endian `u32`,
//! then per pixel (row-major) the four scales as little-endian `f32`. Values
//! are held as `f64` in memory; writing rounds them to `f32`.

use crate::boxspline2d::{scales_from_covariance, Covariance2, ScaleVector4, A_MIN};
use crate::error::{Error, Result};
use crate::image::Image2D;

const MAGIC: &[u8; 4] = b"SVM4";
const HEADER_LEN: usize = 12;
const PIXEL_LEN: usize = 16;

/// A scale vector for every pixel of a `width x height` image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleMap {
    width: usize,
    height: usize,
    scales: Vec<ScaleVector4>,
}

impl ScaleMap {
    pub fn new(width: usize, height: usize, scales: Vec<ScaleVector4>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("scale map must be non-empty, got {width}x{height}")));
        }
        if scales.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (scales.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            scales,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> ScaleVector4 {
        self.scales[y * self.width + x]
    }

    pub fn scales(&self) -> &[ScaleVector4] {
        &self.scales
    }

    /// Componentwise maximum over all pixels.
    pub fn max_scale(&self) -> ScaleVector4 {
        self.scales
            .iter()
            .skip(1)
            .fold(self.scales[0], |acc, s| acc.componentwise_max(s))
    }

    /// The common scale vector, if every pixel has the same one.
    pub fn uniform_value(&self) -> Option<ScaleVector4> {
        let first = self.scales[0];
        self.scales.iter().all(|s| *s == first).then_some(first)
    }
}

pub fn constant_map(width: usize, height: usize, scales: [f64; 4]) -> Result<ScaleMap> {
    let a = ScaleVector4::new(scales)?;
    ScaleMap::new(width, height, vec![a; width * height])
}

/// Pixels whose requested shape could not be represented exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClampReport {
    /// Row-major indices whose covariance was projected onto the feasible set
    /// `|Cxy| <= min(Cxx, Cyy)`.
    pub projected: Vec<usize>,
    /// Row-major indices where a scale component was raised to the minimum.
    pub scale_clamped: Vec<usize>,
}

impl ClampReport {
    pub fn clamped_count(&self) -> usize {
        self.projected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projected.is_empty() && self.scale_clamped.is_empty()
    }
}

/// Builds a map from per-pixel ellipses: deviation `sigma_major` along the
/// angle `theta` (radians, from the x axis towards y) and `sigma_minor`
/// across it.
///
/// Shapes outside the four-direction family are projected to the nearest
/// representable covariance and listed in the report instead of failing.
pub fn from_ellipse_field(
    width: usize,
    height: usize,
    sigma_major: &[f64],
    sigma_minor: &[f64],
    theta: &[f64],
) -> Result<(ScaleMap, ClampReport)> {
    let n = width * height;
    for field in [sigma_major, sigma_minor, theta] {
        if field.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (field.len(), 1),
            });
        }
    }
    let mut report = ClampReport::default();
    let mut scales = Vec::with_capacity(n);
    for i in 0..n {
        let (s1, s2, t) = (sigma_major[i], sigma_minor[i], theta[i]);
        if !(s1.is_finite() && s1 > 0.0 && s2.is_finite() && s2 > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!(
                "pixel {i}: ellipse needs positive finite deviations, got ({s1}, {s2}, {t})"
            )));
        }
        let mut c = Covariance2::from_ellipse(s1, s2, t);
        let limit = c.xx.min(c.yy);
        if c.xy.abs() > limit {
            c.xy = c.xy.clamp(-limit, limit);
            report.projected.push(i);
        }
        let fit = scales_from_covariance(&c, A_MIN)?;
        if fit.clamped {
            report.scale_clamped.push(i);
        }
        scales.push(fit.scales);
    }
    Ok((ScaleMap::new(width, height, scales)?, report))
}

/// Settings of the edge-adaptive map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureTensorParams {
    /// Deviation of the Gaussian that smooths the gradient outer products.
    pub tensor_sigma: f64,
    /// Isotropic deviation used where the image has no orientation.
    pub sigma_base: f64,
    /// Deviation along strongly oriented structures.
    pub sigma_along_max: f64,
    /// Deviation across strongly oriented structures.
    pub sigma_across_min: f64,
    /// Eigenvalue gap `k` at which the anisotropy weight `1 - exp(-gap / k^2)`
    /// reaches about 63%.
    pub coherence_k: f64,
}

impl Default for StructureTensorParams {
    fn default() -> Self {
        Self {
            tensor_sigma: 1.5,
            sigma_base: 1.0,
            sigma_along_max: 3.0,
            sigma_across_min: 0.5,
            coherence_k: 0.05,
        }
    }
}

/// Per-pixel ellipse parameters derived from the structure tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationField {
    pub width: usize,
    pub height: usize,
    pub sigma_along: Vec<f64>,
    pub sigma_across: Vec<f64>,
    /// Direction of the minor eigenvector, in `(-pi/2, pi/2]`.
    pub theta: Vec<f64>,
    /// Anisotropy weight in `[0, 1)`.
    pub coherence: Vec<f64>,
}

fn gaussian_taps(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable smoothing with replicated borders.
fn smooth(data: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * data[y * width + clamp(x as i64 + k as i64 - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clamp(y as i64 + k as i64 - r, height) * width + x])
                .sum();
        }
    }
    out
}

fn check_params(p: &StructureTensorParams) -> Result<()> {
    let ok = p.tensor_sigma >= 0.0
        && p.sigma_base > 0.0
        && p.sigma_along_max > 0.0
        && p.sigma_across_min > 0.0
        && p.coherence_k > 0.0
        && [p.tensor_sigma, p.sigma_base, p.sigma_along_max, p.sigma_across_min, p.coherence_k]
            .iter()
            .all(|v| v.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("invalid structure-tensor parameters {p:?}")))
    }
}

/// Orientation and anisotropy from the smoothed structure tensor of
/// central-difference gradients.
pub fn structure_tensor_fields(
    image: &Image2D,
    params: &StructureTensorParams,
) -> Result<OrientationField> {
    check_params(params)?;
    let (w, h) = image.dims();
    let at = |x: i64, y: i64| image.get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize);
    let n = w * h;
    let (mut jxx, mut jxy, mut jyy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = 0.5 * (at(x + 1, y) - at(x - 1, y));
            let gy = 0.5 * (at(x, y + 1) - at(x, y - 1));
            let i = y as usize * w + x as usize;
            jxx[i] = gx * gx;
            jxy[i] = gx * gy;
            jyy[i] = gy * gy;
        }
    }
    let taps = gaussian_taps(params.tensor_sigma);
    let (jxx, jxy, jyy) = (
        smooth(&jxx, w, h, &taps),
        smooth(&jxy, w, h, &taps),
        smooth(&jyy, w, h, &taps),
    );

    let k2 = params.coherence_k * params.coherence_k;
    let mut field = OrientationField {
        width: w,
        height: h,
        sigma_along: Vec::with_capacity(n),
        sigma_across: Vec::with_capacity(n),
        theta: Vec::with_capacity(n),
        coherence: Vec::with_capacity(n),
    };
    for i in 0..n {
        let half_diff = 0.5 * (jxx[i] - jyy[i]);
        let gap = 2.0 * (half_diff * half_diff + jxy[i] * jxy[i]).sqrt();
        let weight = 1.0 - (-gap / k2).exp();
        let major = 0.5 * (2.0 * jxy[i]).atan2(jxx[i] - jyy[i]);
        let mut theta = major + std::f64::consts::FRAC_PI_2;
        if theta > std::f64::consts::FRAC_PI_2 {
            theta -= std::f64::consts::PI;
        }
        field.sigma_along.push(params.sigma_base + (params.sigma_along_max - params.sigma_base) * weight);
        field.sigma_across.push(params.sigma_base + (params.sigma_across_min - params.sigma_base) * weight);
        field.theta.push(theta);
        field.coherence.push(weight);
    }
    Ok(field)
}

/// Edge-adaptive map: long, thin kernels along oriented structures and
/// isotropic ones in flat regions.
pub fn structure_tensor_map(
    image: &Image2D,
    params: &StructureTensorParams,
) -> Result<(ScaleMap, ClampReport)> {
    let f = structure_tensor_fields(image, params)?;
    from_ellipse_field(f.width, f.height, &f.sigma_along, &f.sigma_across, &f.theta)
}

pub fn write_map(map: &ScaleMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + PIXEL_LEN * map.scales.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(map.width as u32).to_le_bytes());
    out.extend_from_slice(&(map.height as u32).to_le_bytes());
    for s in &map.scales {
        for a in s.components() {
            out.extend_from_slice(&(a as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_map(bytes: &[u8]) -> Result<ScaleMap> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected SVM4".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice")) as usize;
    let (width, height) = (word(4), word(8));
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("empty map {width}x{height}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(PIXEL_LEN))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format(format!("map size {width}x{height} overflows")))?;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {width}x{height} needs {expected} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after a {width}x{height} map",
            bytes.len() - expected
        )));
    }
    let scales = bytes[HEADER_LEN..]
        .chunks_exact(PIXEL_LEN)
        .map(|px| {
            let comp = |k: usize| {
                f64::from(f32::from_le_bytes(px[4 * k..4 * k + 4].try_into().expect("4-byte slice")))
            };
            ScaleVector4::new([comp(0), comp(1), comp(2), comp(3)])
        })
        .collect::<Result<Vec<_>>>()?;
    ScaleMap::new(width, height, scales)
}
