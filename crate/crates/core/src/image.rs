use crate::error::{Error, Result};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }

    pub fn is_empty(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect {
            x0: self.x0.max(other.x0),
            y0: self.y0.max(other.y0),
            x1: self.x1.min(other.x1),
            y1: self.y1.min(other.y1),
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..self.y1.max(self.y0)).flat_map(move |y| (self.x0..self.x1.max(self.x0)).map(move |x| (x, y)))
    }
}

/// Dense row-major grayscale image; `x` indexes columns and `y` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    width: usize,
    height: usize,
    samples: Vec<f64>,
    valid: Option<Rect>,
}

impl Image2D {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("image must be non-empty, got {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (samples.len(), 1),
            });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            samples,
            valid: None,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let samples = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, samples)
    }

    /// Unit sample at `(x, y)`, zero elsewhere.
    pub fn impulse(width: usize, height: usize, x: usize, y: usize) -> Result<Self> {
        let mut img = Self::zeros(width, height)?;
        if x >= width || y >= height {
            return Err(Error::Domain(format!("impulse ({x}, {y}) outside {width}x{height}")));
        }
        img.samples[y * width + x] = 1.0;
        Ok(img)
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

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    /// Sample with zero extension outside the image.
    pub fn get_or_zero(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.samples[y as usize * self.width + x as usize]
        }
    }

    /// Region where the samples are not affected by the image boundary, if known.
    pub fn valid_region(&self) -> Option<Rect> {
        self.valid
    }

    pub fn with_valid_region(mut self, rect: Rect) -> Self {
        self.valid = Some(rect);
        self
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Largest absolute difference to `other` over `region` (whole image if `None`).
    pub fn max_abs_diff(&self, other: &Image2D, region: Option<Rect>) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let full = Rect::new(0, 0, self.width, self.height);
        let r = region.unwrap_or(full).intersect(&full);
        Ok(r.pixels()
            .map(|(x, y)| (self.get(x, y) - other.get(x, y)).abs())
            .fold(0.0, f64::max))
    }
}
