//! Binary portable graymap ("P5") reading and writing.

use std::fmt;

use adaptive_boxfilter::Image2D;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PgmError {
    BadMagic,
    BadHeader(String),
    UnsupportedMaxval(u32),
    Truncated { expected: usize, actual: usize },
}

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PgmError::BadMagic => write!(f, "not a binary graymap (expected magic P5)"),
            PgmError::BadHeader(msg) => write!(f, "malformed graymap header: {msg}"),
            PgmError::UnsupportedMaxval(v) => write!(f, "unsupported maxval {v} (1..=65535)"),
            PgmError::Truncated { expected, actual } => {
                write!(f, "truncated raster: expected {expected} bytes, found {actual}")
            }
        }
    }
}

impl std::error::Error for PgmError {}

/// Raw graymap samples as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Graymap {
    pub fn bytes_per_sample(&self) -> usize {
        if self.maxval > 255 {
            2
        } else {
            1
        }
    }

    /// Samples scaled to `[0, 1]`.
    pub fn to_image(&self) -> Image2D {
        let scale = 1.0 / f64::from(self.maxval);
        let samples = self.samples.iter().map(|&v| f64::from(v) * scale).collect();
        Image2D::new(self.width, self.height, samples).expect("graymap dimensions are checked on decode")
    }

    /// Quantizes `image` to `maxval` levels, rounding half away from zero and
    /// clamping to the representable range.
    pub fn from_image(image: &Image2D, maxval: u16) -> Self {
        let m = f64::from(maxval.max(1));
        let samples = image
            .samples()
            .iter()
            .map(|v| (v * m).round().clamp(0.0, m) as u16)
            .collect();
        Self {
            width: image.width(),
            height: image.height(),
            maxval: maxval.max(1),
            samples,
        }
    }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader(format!("missing or invalid {what}")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Graymap, PgmError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut header = Header { bytes, pos: 2 };
    let width = header.number("width")? as usize;
    let height = header.number("height")? as usize;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader(format!("empty raster {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::UnsupportedMaxval(maxval));
    }
    match bytes.get(header.pos) {
        Some(b) if b.is_ascii_whitespace() => header.pos += 1,
        _ => return Err(PgmError::BadHeader("no whitespace after maxval".into())),
    }
    let wide = maxval > 255;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| PgmError::BadHeader("raster size overflows".into()))?;
    let expected = count * if wide { 2 } else { 1 };
    let raster = &bytes[header.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: raster.len(),
        });
    }
    let samples = if wide {
        raster[..expected]
            .chunks_exact(2)
            .map(|p| u16::from_be_bytes([p[0], p[1]]))
            .collect()
    } else {
        raster[..expected].iter().map(|&b| u16::from(b)).collect()
    };
    let map = Graymap {
        width,
        height,
        maxval: maxval as u16,
        samples,
    };
    if let Some(v) = map.samples.iter().find(|&&v| v > map.maxval) {
        return Err(PgmError::BadHeader(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(map)
}

pub fn encode(map: &Graymap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", map.width, map.height, map.maxval).into_bytes();
    out.reserve(map.samples.len() * map.bytes_per_sample());
    if map.bytes_per_sample() == 2 {
        for v in &map.samples {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(map.samples.iter().map(|&v| v as u8));
    }
    out
}
