//! Real-valued grayscale rasters and their binary PGM encoding.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{out_of_range, Error, Result};

/// A row-major `height × width` raster of finite gray levels.
///
/// Values are nominally in `[0, 255]` but intermediate reconstructions are
/// free to leave that range; only finiteness is enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite value at ({}, {})",
                i / width,
                i % width
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Builds an image without re-checking finiteness. Callers inside the
    /// crate use this for transform outputs, which are finite by construction.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(value.is_finite(), "image values must be finite");
        self.data[row * self.width + col] = value;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn check_same_dims(&self, other: &ImageGrid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    /// Adds seeded white Gaussian noise of standard deviation `sigma`.
    pub fn with_gaussian_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(out_of_range("sigma", format!("{sigma} must be >= 0")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| out_of_range("sigma", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = self
            .data
            .iter()
            .map(|&v| v + normal.sample(&mut rng))
            .collect();
        Self::new(self.height, self.width, data)
    }

    /// Quantizes to 8 bits: round half away from zero, then clamp to `[0, 255]`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Parses a binary (`P5`, maxval 255) PGM byte stream.
pub fn decode_pgm(bytes: &[u8]) -> Result<ImageGrid> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Pgm {
            offset: 0,
            message: "wrong magic number, expected P5".into(),
        });
    }
    match bytes[1] {
        b'5' => {}
        b'1'..=b'7' => {
            return Err(Error::Pgm {
                offset: 0,
                message: format!("unsupported PGM variant P{}", bytes[1] as char),
            })
        }
        _ => {
            return Err(Error::Pgm {
                offset: 0,
                message: "wrong magic number, expected P5".into(),
            })
        }
    }
    cursor.pos = 2;
    let (width, _) = cursor.number("width")?;
    let (height, _) = cursor.number("height")?;
    let (maxval, maxval_at) = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(Error::Pgm {
            offset: maxval_at,
            message: format!("unsupported maxval {maxval}, expected 255"),
        });
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => {
            return Err(Error::Pgm {
                offset: cursor.pos,
                message: "missing whitespace after maxval".into(),
            })
        }
    }
    if width == 0 || height == 0 {
        return Err(Error::Pgm {
            offset: 2,
            message: format!("degenerate size {width}x{height}"),
        });
    }
    let n = width * height;
    let raster = &bytes[cursor.pos..];
    if raster.len() < n {
        return Err(Error::Pgm {
            offset: bytes.len(),
            message: format!("truncated raster: {} of {n} bytes", raster.len()),
        });
    }
    let data = raster[..n].iter().map(|&b| f64::from(b)).collect();
    Ok(ImageGrid::from_raw(height, width, data))
}

/// Encodes as binary PGM, quantizing with [`ImageGrid::to_u8`].
pub fn encode_pgm(img: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.to_u8());
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Pgm {
                offset: start,
                message: format!("expected {what}"),
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .map(|v| (v, start))
            .ok_or_else(|| Error::Pgm {
                offset: start,
                message: format!("{what} does not fit in an integer"),
            })
    }
}
