//! Reconstruction error metrics in units of 8-bit gray levels.

use std::fmt;

use crate::error::{out_of_range, Result};
use crate::image::ImageGrid;

/// Peak value used for PSNR.
pub const PEAK: f64 = 255.0;

/// Fraction of smallest errors kept by the trimmed RMS.
pub const DEFAULT_KEEP_FRACTION: f64 = 0.9;

pub fn rms_error(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

/// `20·log10(255 / rms)`, or `+∞` for a perfect reconstruction.
pub fn psnr(rms: f64) -> Result<f64> {
    if rms.is_nan() || rms < 0.0 {
        return Err(out_of_range("rms", format!("{rms} must be >= 0")));
    }
    if rms == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (PEAK / rms).log10())
}

/// RMS over the `floor(keep_fraction · N)` smallest absolute errors.
pub fn trimmed_rms(a: &ImageGrid, b: &ImageGrid, keep_fraction: f64) -> Result<f64> {
    a.check_same_dims(b)?;
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(out_of_range(
            "keep_fraction",
            format!("{keep_fraction} not in (0, 1]"),
        ));
    }
    let mut sq: Vec<f64> = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    let keep = (keep_fraction * sq.len() as f64).floor() as usize;
    if keep == 0 {
        return Ok(0.0);
    }
    if keep < sq.len() {
        sq.select_nth_unstable_by(keep - 1, f64::total_cmp);
    }
    let sum: f64 = sq[..keep].iter().sum();
    Ok((sum / keep as f64).sqrt())
}

/// Summary of the error between a reconstruction and its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub rms: f64,
    pub psnr_db: f64,
    pub trimmed_rms_90: f64,
}

impl ErrorStats {
    pub fn compute(reconstructed: &ImageGrid, reference: &ImageGrid) -> Result<Self> {
        let rms = rms_error(reconstructed, reference)?;
        Ok(Self {
            rms,
            psnr_db: psnr(rms)?,
            trimmed_rms_90: trimmed_rms(reconstructed, reference, DEFAULT_KEEP_FRACTION)?,
        })
    }
}

/// Formats a PSNR value, printing `inf` for the lossless sentinel.
pub struct Db(pub f64);

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.2}", self.0)
        }
    }
}
