//! Energy-compaction zones: standard spectral shapes, their rasterized
//! masks, sparse-spectrum analysis and redundancy accounting.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{out_of_range, Error, Result};
use crate::image::ImageGrid;
use crate::transforms::{dct2, SpectrumGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneFamily {
    Rectangle,
    PieSector,
    Ellipse,
    SuperEllipse,
}

impl ZoneFamily {
    pub const ALL: [ZoneFamily; 4] = [
        Self::Rectangle,
        Self::PieSector,
        Self::Ellipse,
        Self::SuperEllipse,
    ];
}

impl fmt::Display for ZoneFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rectangle => "rectangle",
            Self::PieSector => "pie",
            Self::Ellipse => "ellipse",
            Self::SuperEllipse => "superellipse",
        })
    }
}

impl FromStr for ZoneFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "rectangle" | "rect" => Ok(Self::Rectangle),
            "pie" | "piesector" => Ok(Self::PieSector),
            "ellipse" | "oval" => Ok(Self::Ellipse),
            "superellipse" => Ok(Self::SuperEllipse),
            _ => Err(out_of_range("family", format!("unknown zone shape `{s}`"))),
        }
    }
}

/// Where the zone is attached in the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZoneAnchor {
    /// DCT layout: DC in the upper-left corner, shape occupies one quadrant.
    DcCorner,
    /// Centered DFT layout: shape symmetric about DC, optionally rotated.
    Centered,
}

/// Default super-ellipse exponent, between the ellipse (2) and the rectangle (∞).
pub const DEFAULT_EXPONENT: f64 = 3.0;

/// A parametric zone shape.
///
/// The semi-axes are `a = scale / √ρ` horizontally and `b = scale · √ρ`
/// vertically, so `ρ = b / a` and the area grows as `scale²`. Coordinates are
/// normalized so that the full band spans `[0, 1)` (corner anchor) or
/// `[-1, 1)` (centered anchor) along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneShape {
    family: ZoneFamily,
    anchor: ZoneAnchor,
    aspect_ratio: f64,
    exponent: f64,
    orientation: f64,
    span: f64,
    scale: f64,
    area_fraction: Option<f64>,
}

impl ZoneShape {
    pub fn new(family: ZoneFamily, anchor: ZoneAnchor) -> Self {
        Self {
            family,
            anchor,
            aspect_ratio: 1.0,
            exponent: DEFAULT_EXPONENT,
            orientation: 0.0,
            span: match anchor {
                ZoneAnchor::DcCorner => FRAC_PI_2,
                ZoneAnchor::Centered => PI,
            },
            scale: 1.0,
            area_fraction: None,
        }
    }

    pub fn with_aspect_ratio(mut self, rho: f64) -> Self {
        self.aspect_ratio = rho;
        self
    }

    pub fn with_exponent(mut self, p: f64) -> Self {
        self.exponent = p;
        self
    }

    pub fn with_orientation(mut self, theta: f64) -> Self {
        self.orientation = theta;
        self
    }

    /// Angular span of a pie sector, in radians.
    pub fn with_span(mut self, span: f64) -> Self {
        self.span = span;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self.area_fraction = None;
        self
    }

    pub fn family(&self) -> ZoneFamily {
        self.family
    }

    pub fn anchor(&self) -> ZoneAnchor {
        self.anchor
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.aspect_ratio
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Achieved raster fraction, recorded when the shape was fitted.
    pub fn area_fraction(&self) -> Option<f64> {
        self.area_fraction
    }

    /// Horizontal and vertical semi-axes.
    pub fn semi_axes(&self) -> (f64, f64) {
        let s = self.aspect_ratio.sqrt();
        (self.scale / s, self.scale * s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aspect_ratio > 0.0 && self.aspect_ratio.is_finite()) {
            return Err(out_of_range("aspect_ratio", format!("{} must be > 0", self.aspect_ratio)));
        }
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(out_of_range("exponent", format!("{} must be > 0", self.exponent)));
        }
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(out_of_range("scale", format!("{} must be >= 0", self.scale)));
        }
        if !self.orientation.is_finite() {
            return Err(out_of_range("orientation", "must be finite"));
        }
        if self.anchor == ZoneAnchor::DcCorner && self.orientation != 0.0 {
            return Err(out_of_range("orientation", "corner-anchored zones cannot be rotated"));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(out_of_range("span", format!("{} must be > 0", self.span)));
        }
        Ok(())
    }

    /// Smallest scale at which `(u, v)` belongs to the zone; infinite for
    /// points a pie sector never reaches. Rectangles exclude their boundary,
    /// so for them membership needs a scale strictly above this value.
    fn critical_scale(&self, u: f64, v: f64) -> f64 {
        let k = self.aspect_ratio.sqrt();
        let (x, y) = ((u * k).abs(), (v / k).abs());
        match self.family {
            ZoneFamily::Rectangle => x.max(y),
            ZoneFamily::Ellipse => x.hypot(y),
            ZoneFamily::SuperEllipse => {
                let p = self.exponent;
                (x.powf(p) + y.powf(p)).powf(1.0 / p)
            }
            ZoneFamily::PieSector => {
                let half = self.span / 2.0;
                let inside = match self.anchor {
                    ZoneAnchor::DcCorner => (v.atan2(u) - FRAC_PI_4).abs() <= half,
                    ZoneAnchor::Centered => {
                        // point-symmetric: fold the direction into (-π/2, π/2]
                        let mut phi = v.atan2(u);
                        if phi > FRAC_PI_2 {
                            phi -= PI;
                        } else if phi <= -FRAC_PI_2 {
                            phi += PI;
                        }
                        phi.abs() <= half
                    }
                };
                if inside {
                    u.hypot(v)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn admits(&self, critical: f64) -> bool {
        match self.family {
            ZoneFamily::Rectangle => critical < self.scale,
            _ => critical <= self.scale,
        }
    }

    /// Critical scale of every cell, row-major.
    fn critical_scales(&self, height: usize, width: usize) -> Vec<f64> {
        let (sin, cos) = self.orientation.sin_cos();
        let (ch, cw) = (height / 2, width / 2);
        (0..height * width)
            .map(|i| {
                let (r, c) = (i / width, i % width);
                match self.anchor {
                    ZoneAnchor::DcCorner => self.critical_scale(c as f64 / width as f64, r as f64 / height as f64),
                    ZoneAnchor::Centered => {
                        let u = (c as f64 - cw as f64) / (width as f64 / 2.0);
                        let v = (r as f64 - ch as f64) / (height as f64 / 2.0);
                        self.critical_scale(u * cos + v * sin, -u * sin + v * cos)
                    }
                }
            })
            .collect()
    }

    fn rasterize(&self, height: usize, width: usize) -> SpectralMask {
        let crit = self.critical_scales(height, width);
        SpectralMask {
            height,
            width,
            bits: crit.into_iter().map(|c| self.admits(c)).collect(),
        }
    }

    /// Scale at which the continuous shape covers `fraction` of the frame,
    /// for families with a simple area formula.
    fn closed_form_scale(&self, fraction: f64) -> Option<f64> {
        match self.family {
            ZoneFamily::Rectangle => Some(fraction.sqrt()),
            ZoneFamily::Ellipse => Some((4.0 * fraction / PI).sqrt()),
            ZoneFamily::PieSector => Some(match self.anchor {
                ZoneAnchor::DcCorner => (2.0 * fraction / self.span).sqrt(),
                ZoneAnchor::Centered => (4.0 * fraction / self.span).sqrt(),
            }),
            ZoneFamily::SuperEllipse => None,
        }
    }
}

impl fmt::Display for ZoneShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rho={} scale={:.6}", self.family, self.aspect_ratio, self.scale)?;
        if self.family == ZoneFamily::SuperEllipse {
            write!(f, " p={}", self.exponent)?;
        }
        if self.orientation != 0.0 {
            write!(f, " theta={}", self.orientation)?;
        }
        if let Some(fr) = self.area_fraction {
            write!(f, " fraction={fr:.6}")?;
        }
        Ok(())
    }
}

/// Binary spectral zone: `true` marks kept coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl SpectralMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "mask of {} bits does not fit {height}x{width}",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |_, _| true)
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self::from_fn(height, width, |_, _| false)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    /// Zeroes every coefficient outside the zone.
    pub fn apply(&self, coeffs: &mut [f64]) {
        for (c, &keep) in coeffs.iter_mut().zip(&self.bits) {
            if !keep {
                *c = 0.0;
            }
        }
    }

    /// 0 outside, 255 inside.
    pub fn to_image(&self) -> ImageGrid {
        let data = self.bits.iter().map(|&b| if b { 255.0 } else { 0.0 }).collect();
        ImageGrid::from_raw(self.height, self.width, data)
    }

    /// Inverse of [`to_image`](Self::to_image); values ≥ 128 are inside.
    pub fn from_image(img: &ImageGrid) -> Self {
        let (h, w) = img.dims();
        Self {
            height: h,
            width: w,
            bits: img.data().iter().map(|&v| v >= 128.0).collect(),
        }
    }
}

/// Rasterizes a shape at its current scale.
pub fn build_zone_mask(shape: &ZoneShape, height: usize, width: usize) -> Result<SpectralMask> {
    shape.validate()?;
    if height == 0 || width == 0 {
        return Err(out_of_range("dimensions", "must be positive"));
    }
    Ok(shape.rasterize(height, width))
}

/// Cells sorted by the scale at which they join the zone. Every mask of the
/// family is a prefix of this order ending on a group boundary.
struct ScaleOrder {
    order: Vec<usize>,
    sorted: Vec<f64>,
    /// Prefix lengths reachable by some scale, ascending, starting at 0.
    boundaries: Vec<usize>,
}

impl ScaleOrder {
    fn new(template: &ZoneShape, height: usize, width: usize) -> Self {
        let crit = template.critical_scales(height, width);
        let mut order: Vec<usize> = (0..crit.len()).collect();
        order.sort_by(|&i, &j| crit[i].total_cmp(&crit[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| crit[i]).collect();
        let mut boundaries = vec![0];
        for k in 1..=sorted.len() {
            if !sorted[k - 1].is_finite() {
                break;
            }
            if k == sorted.len() || sorted[k] != sorted[k - 1] {
                boundaries.push(k);
            }
        }
        Self {
            order,
            sorted,
            boundaries,
        }
    }

    /// A scale whose mask is exactly the first `k` cells (`k` a boundary).
    fn scale_for(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.5 * self.sorted.first().copied().unwrap_or(0.0).min(1.0);
        }
        let lo = self.sorted[k - 1];
        match self.sorted.get(k) {
            Some(&hi) if hi.is_finite() => 0.5 * (lo + hi),
            _ => lo * (1.0 + 1e-9) + f64::MIN_POSITIVE,
        }
    }

    fn fitted(&self, template: &ZoneShape, height: usize, width: usize, k: usize) -> (ZoneShape, SpectralMask) {
        let mut bits = vec![false; self.order.len()];
        for &i in &self.order[..k] {
            bits[i] = true;
        }
        let mut shape = template.with_scale(self.scale_for(k));
        shape.area_fraction = Some(k as f64 / bits.len() as f64);
        (shape, SpectralMask { height, width, bits })
    }

    /// Energy outside each prefix, accumulated from the outermost cell inward.
    fn outside_energy(&self, energies: &[f64]) -> Vec<f64> {
        let n = self.order.len();
        let mut suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] + energies[self.order[k]];
        }
        suffix
    }
}

/// Fits the shape's scale so its raster covers `target` of the grid.
///
/// Accepts when the cell count is within `max(8, 0.001·N)` cells of the
/// target. Families with a closed-form area are tried at that scale first.
/// When a single raster step jumps over the tolerance band the nearest
/// achievable count is returned; targets the family cannot reach at any
/// scale are an error.
pub fn fit_shape_to_fraction(
    template: &ZoneShape,
    target: f64,
    height: usize,
    width: usize,
) -> Result<ZoneShape> {
    template.validate()?;
    if !(target > 0.0 && target <= 1.0) {
        return Err(out_of_range("area_fraction", format!("{target} not in (0, 1]")));
    }
    let n = (height * width) as f64;
    if target * n < 1.0 {
        return Err(out_of_range(
            "area_fraction",
            format!("{target} is below one-cell resolution on {height}x{width}"),
        ));
    }
    let goal = target * n;
    let tol = (0.001 * n).max(8.0);
    if let Some(s) = template.closed_form_scale(target) {
        let mut shape = template.with_scale(s);
        let c = shape.rasterize(height, width).count() as f64;
        if (c - goal).abs() <= tol && target < 1.0 {
            shape.area_fraction = Some(c / n);
            return Ok(shape);
        }
    }
    let order = ScaleOrder::new(template, height, width);
    let reachable = *order.boundaries.last().unwrap_or(&0) as f64;
    if goal - reachable > tol {
        return Err(Error::UnreachableFraction {
            target,
            nearest: reachable / n,
        });
    }
    // nearest achievable count; a raster step may jump over the tolerance band
    let k = order
        .boundaries
        .iter()
        .copied()
        .min_by(|&a, &b| (a as f64 - goal).abs().total_cmp(&(b as f64 - goal).abs()))
        .unwrap_or(0);
    Ok(order.fitted(template, height, width, k).0)
}

/// Smallest zone of the given shape whose band-limited approximation of the
/// DCT spectrum has RMS error at most `rms_target`.
pub fn fit_zone_to_rms(
    template: &ZoneShape,
    spectrum: &SpectrumGrid,
    rms_target: f64,
) -> Result<(ZoneShape, SpectralMask)> {
    template.validate()?;
    if !(rms_target >= 0.0) {
        return Err(out_of_range("rms_target", format!("{rms_target} must be >= 0")));
    }
    let energies = spectrum.energies();
    let n = energies.len() as f64;
    let total: f64 = energies.iter().sum();
    let budget = rms_target * rms_target * n * (1.0 + 1e-9) + NUMERICAL_ZERO * total;
    let (h, w) = spectrum.dims();
    let order = ScaleOrder::new(template, h, w);
    let outside = order.outside_energy(&energies);
    let k = order
        .boundaries
        .iter()
        .copied()
        .find(|&k| outside[k] <= budget)
        .ok_or_else(|| out_of_range("rms_target", format!("{rms_target} is not reachable with this zone shape")))?;
    Ok(order.fitted(template, h, w, k))
}

/// Smallest zone of the given shape holding at least `energy_fraction` of the
/// spectrum's energy.
pub fn fit_zone_to_energy(
    template: &ZoneShape,
    spectrum: &SpectrumGrid,
    energy_fraction: f64,
) -> Result<(ZoneShape, SpectralMask)> {
    template.validate()?;
    if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
        return Err(out_of_range("energy_fraction", format!("{energy_fraction} not in (0, 1]")));
    }
    let energies = spectrum.energies();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let (h, w) = spectrum.dims();
    let order = ScaleOrder::new(template, h, w);
    let outside = order.outside_energy(&energies);
    let k = order
        .boundaries
        .iter()
        .copied()
        .find(|&k| total - outside[k] >= energy_fraction * total * (1.0 - 1e-12))
        .ok_or_else(|| out_of_range("energy_fraction", format!("{energy_fraction} is not reachable with this zone shape")))?;
    Ok(order.fitted(template, h, w, k))
}

/// Fits each candidate to `rms_target` and keeps the one with the smallest area.
pub fn best_zone_for_rms(
    candidates: &[ZoneShape],
    spectrum: &SpectrumGrid,
    rms_target: f64,
) -> Result<(ZoneShape, SpectralMask)> {
    let mut best: Option<(ZoneShape, SpectralMask)> = None;
    for c in candidates {
        let fit = fit_zone_to_rms(c, spectrum, rms_target)?;
        if best.as_ref().is_none_or(|b| fit.1.count() < b.1.count()) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| out_of_range("candidates", "no zone shapes given"))
}

pub fn energy_fraction_in_mask(spectrum: &SpectrumGrid, mask: &SpectralMask) -> Result<f64> {
    if spectrum.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.dims(),
            found: mask.dims(),
        });
    }
    let energies = spectrum.energies();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let inside: f64 = energies
        .iter()
        .zip(mask.bits())
        .filter(|(_, &k)| k)
        .map(|(e, _)| e)
        .sum();
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Coefficients with energy at or below this fraction of the total are
/// treated as exact zeros (transform round-off).
pub const NUMERICAL_ZERO: f64 = 1e-24;

/// The `K` largest-energy DCT coefficients that reach a target RMS error.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpectrumReport {
    pub height: usize,
    pub width: usize,
    pub k: usize,
    pub sparsity: f64,
    /// `(row, col)` of kept coefficients, by decreasing energy.
    pub kept: Vec<(usize, usize)>,
    pub kept_energies: Vec<f64>,
    pub achieved_rms: f64,
}

impl SparseSpectrumReport {
    pub fn kept_mask(&self) -> SpectralMask {
        let mut bits = vec![false; self.height * self.width];
        for &(r, c) in &self.kept {
            bits[r * self.width + c] = true;
        }
        SpectralMask {
            height: self.height,
            width: self.width,
            bits,
        }
    }

    /// `row,col,energy` lines under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,energy\n");
        for (&(r, c), e) in self.kept.iter().zip(&self.kept_energies) {
            out.push_str(&format!("{r},{c},{e}\n"));
        }
        out
    }
}

pub fn sparse_spectrum(img: &ImageGrid, rms_target: f64) -> Result<SparseSpectrumReport> {
    sparse_spectrum_of(&dct2(img), rms_target)
}

/// Greedy-by-energy selection on an existing DCT spectrum.
pub fn sparse_spectrum_of(spectrum: &SpectrumGrid, rms_target: f64) -> Result<SparseSpectrumReport> {
    if !(rms_target >= 0.0) {
        return Err(out_of_range("rms_target", format!("{rms_target} must be >= 0")));
    }
    let coeffs = spectrum.real()?;
    let (h, w) = spectrum.dims();
    let n = coeffs.len();
    let energies: Vec<f64> = coeffs.iter().map(|c| c * c).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal energies keep row-major order
    order.sort_by(|&i, &j| energies[j].total_cmp(&energies[i]));

    // tail[k] = energy of everything after the first k, summed smallest-first
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + energies[order[k]];
    }
    let total = tail[0];
    let budget = rms_target * rms_target * n as f64 * (1.0 + 1e-9) + NUMERICAL_ZERO * total;
    let k = (0..=n).find(|&k| tail[k] <= budget).unwrap_or(n);

    let kept: Vec<(usize, usize)> = order[..k].iter().map(|&i| (i / w, i % w)).collect();
    let kept_energies = order[..k].iter().map(|&i| energies[i]).collect();
    Ok(SparseSpectrumReport {
        height: h,
        width: w,
        k,
        sparsity: k as f64 / n as f64,
        kept,
        kept_energies,
        achieved_rms: (tail[k] / n as f64).sqrt(),
    })
}

/// Zone area relative to the sparse-spectrum minimum.
pub fn ec_zone_redundancy(mask_fraction: f64, sparsity: f64) -> Result<f64> {
    if !(sparsity > 0.0) {
        return Err(out_of_range("sparsity", format!("{sparsity} must be > 0")));
    }
    if !(mask_fraction >= 0.0) {
        return Err(out_of_range("mask_fraction", format!("{mask_fraction} must be >= 0")));
    }
    Ok(mask_fraction / sparsity)
}

/// Redundancy `M/K` required by the compressed-sensing bound at a given sparsity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsBound {
    pub redundancy: f64,
    /// The raw fixed point was below 1 and has been raised to 1.
    pub clamped: bool,
}

/// Solves `r = -2·ln(r·s)` for `r` by bisection.
///
/// `r + 2·ln(r·s)` is strictly increasing in `r`, so the root is unique.
pub fn cs_required_redundancy(sparsity: f64) -> Result<CsBound> {
    if !(sparsity > 0.0 && sparsity < 1.0) {
        return Err(out_of_range("sparsity", format!("{sparsity} not in (0, 1)")));
    }
    let g = |r: f64| r + 2.0 * (r * sparsity).ln();
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut r = hi;
    for _ in 0..2000 {
        r = 0.5 * (lo + hi);
        let v = g(r);
        if v.abs() < 1e-12 || hi - lo <= f64::EPSILON * hi {
            break;
        }
        if v < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
    }
    if r < 1.0 {
        Ok(CsBound {
            redundancy: 1.0,
            clamped: true,
        })
    } else {
        Ok(CsBound {
            redundancy: r,
            clamped: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::idct2;
    use proptest::prelude::*;

    fn corner(family: ZoneFamily) -> ZoneShape {
        ZoneShape::new(family, ZoneAnchor::DcCorner)
    }

    #[test]
    fn rectangle_quarter_is_exact_block() {
        let shape = fit_shape_to_fraction(&corner(ZoneFamily::Rectangle), 0.25, 512, 512).unwrap();
        let (a, b) = shape.semi_axes();
        assert_eq!((a, b), (0.5, 0.5));
        let mask = build_zone_mask(&shape, 512, 512).unwrap();
        assert_eq!(mask.fraction(), 0.25);
        assert!(mask.get(255, 255) && !mask.get(256, 0) && !mask.get(0, 256));
    }

    #[test]
    fn unit_quarter_disk_area() {
        let mask = build_zone_mask(&corner(ZoneFamily::Ellipse).with_scale(1.0), 512, 512).unwrap();
        assert!((mask.fraction() / FRAC_PI_4 - 1.0).abs() < 0.01, "{}", mask.fraction());
    }

    #[test]
    fn high_exponent_super_ellipse_approaches_rectangle() {
        let s = 0.6;
        let rect = build_zone_mask(&corner(ZoneFamily::Rectangle).with_scale(s), 512, 512).unwrap();
        let sup = build_zone_mask(
            &corner(ZoneFamily::SuperEllipse).with_exponent(20.0).with_scale(s),
            512,
            512,
        )
        .unwrap();
        let diff = (rect.fraction() - sup.fraction()).abs();
        assert!(diff < 0.01 * rect.fraction(), "{diff}");
    }

    #[test]
    fn full_fraction_gives_full_mask() {
        for family in ZoneFamily::ALL {
            for anchor in [ZoneAnchor::DcCorner, ZoneAnchor::Centered] {
                let shape = fit_shape_to_fraction(
                    &ZoneShape::new(family, anchor).with_aspect_ratio(0.4),
                    1.0,
                    33,
                    40,
                )
                .unwrap();
                assert_eq!(build_zone_mask(&shape, 33, 40).unwrap().fraction(), 1.0, "{family}");
            }
        }
    }

    #[test]
    fn ellipse_fit_matches_target() {
        let shape = fit_shape_to_fraction(
            &corner(ZoneFamily::Ellipse).with_aspect_ratio(0.3),
            0.275,
            512,
            512,
        )
        .unwrap();
        let fr = build_zone_mask(&shape, 512, 512).unwrap().fraction();
        assert!((fr - 0.275).abs() <= 0.002, "{fr}");
        assert_eq!(shape.area_fraction(), Some(fr));
    }

    #[test]
    fn every_family_fits_typical_fractions() {
        for family in ZoneFamily::ALL {
            for anchor in [ZoneAnchor::DcCorner, ZoneAnchor::Centered] {
                let mut t = ZoneShape::new(family, anchor).with_aspect_ratio(0.6);
                if anchor == ZoneAnchor::Centered {
                    t = t.with_orientation(0.3);
                }
                for target in [0.05, 0.2, 0.5] {
                    let shape = fit_shape_to_fraction(&t, target, 128, 96).unwrap();
                    let fr = build_zone_mask(&shape, 128, 96).unwrap().fraction();
                    let n: f64 = 128.0 * 96.0;
                    if (fr - target).abs() > (0.001 * n).max(8.0) / n + 1e-12 {
                        // only allowed when no achievable count is closer
                        let mut crit = t.critical_scales(128, 96);
                        crit.retain(|c| c.is_finite());
                        crit.sort_by(f64::total_cmp);
                        let goal = target * n;
                        let closest = (0..=crit.len())
                            .filter(|&k| k == 0 || k == crit.len() || crit[k] != crit[k - 1])
                            .map(|k| (k as f64 - goal).abs())
                            .fold(f64::INFINITY, f64::min);
                        assert!(((fr * n) - goal).abs() <= closest + 1e-9, "{family} {anchor:?} {target}: {fr}");
                    }
                }
            }
        }
    }

    #[test]
    fn fit_rejects_subcell_and_bad_targets() {
        let t = corner(ZoneFamily::Ellipse);
        assert!(fit_shape_to_fraction(&t, 0.01, 8, 8).is_err());
        assert!(fit_shape_to_fraction(&t, 0.0, 8, 8).is_err());
        assert!(fit_shape_to_fraction(&t, 1.5, 8, 8).is_err());
        // a narrow pie on a tiny grid cannot reach most fractions
        let pie = corner(ZoneFamily::PieSector).with_span(0.01);
        assert!(matches!(
            fit_shape_to_fraction(&pie, 0.5, 16, 16),
            Err(Error::UnreachableFraction { .. })
        ));
    }

    #[test]
    fn corner_anchor_rejects_rotation() {
        let t = corner(ZoneFamily::Ellipse).with_orientation(0.2);
        assert!(build_zone_mask(&t, 8, 8).is_err());
    }

    #[test]
    fn centered_zone_is_point_symmetric() {
        let shape = ZoneShape::new(ZoneFamily::Ellipse, ZoneAnchor::Centered)
            .with_aspect_ratio(0.4)
            .with_orientation(0.7)
            .with_scale(0.5);
        let m = build_zone_mask(&shape, 64, 64).unwrap();
        for r in 1..64 {
            for c in 1..64 {
                assert_eq!(m.get(r, c), m.get(64 - r, 64 - c));
            }
        }
        assert!(m.get(32, 32));
    }

    #[test]
    fn energy_fraction_examples() {
        let img = ImageGrid::filled(8, 8, 3.0).unwrap();
        let s = dct2(&img);
        assert_eq!(energy_fraction_in_mask(&s, &SpectralMask::full(8, 8)).unwrap(), 1.0);
        assert_eq!(energy_fraction_in_mask(&s, &SpectralMask::empty(8, 8)).unwrap(), 0.0);
        let dc_only = SpectralMask::from_fn(8, 8, |r, c| r + c == 0);
        assert!((energy_fraction_in_mask(&s, &dc_only).unwrap() - 1.0).abs() < 1e-12);
        let zero = dct2(&ImageGrid::zeros(8, 8).unwrap());
        assert!(matches!(
            energy_fraction_in_mask(&zero, &dc_only),
            Err(Error::ZeroEnergy)
        ));
    }

    #[test]
    fn sparse_spectrum_trivial_images() {
        let constant = ImageGrid::filled(16, 16, 77.0).unwrap();
        let rep = sparse_spectrum(&constant, 0.0).unwrap();
        assert_eq!(rep.k, 1);
        assert_eq!(rep.kept, vec![(0, 0)]);
        assert_eq!(rep.sparsity, 1.0 / 256.0);

        let mut c = vec![0.0; 64];
        c[3 * 8 + 5] = 40.0;
        let basis = idct2(&SpectrumGrid::from_dct(8, 8, c).unwrap()).unwrap();
        let rep = sparse_spectrum(&basis, 0.0).unwrap();
        assert_eq!((rep.k, rep.kept[0]), (1, (3, 5)));

        // a target above the full-energy RMS keeps nothing
        let rep = sparse_spectrum(&constant, 78.0).unwrap();
        assert_eq!(rep.k, 0);
    }

    #[test]
    fn sparse_spectrum_constructed_energies() {
        // energies {100, 9, 4, 2, 1} spread over a 4x4 spectrum
        let mut c = vec![0.0; 16];
        c[0] = 10.0;
        c[5] = 3.0;
        c[2] = -2.0;
        c[12] = 2f64.sqrt();
        c[15] = 1.0;
        let img = idct2(&SpectrumGrid::from_dct(4, 4, c.clone()).unwrap()).unwrap();
        let target = (3.0f64 / 16.0).sqrt();

        // brute force over every K on the constructed energies
        let mut e: Vec<f64> = c.iter().map(|v| v * v).collect();
        e.sort_by(|a, b| b.total_cmp(a));
        let expected = (0..=16)
            .find(|&k| (e[k..].iter().sum::<f64>() / 16.0).sqrt() <= target + 1e-12)
            .unwrap();
        assert_eq!(expected, 3);

        let rep = sparse_spectrum(&img, target).unwrap();
        assert_eq!(rep.k, expected);
        assert_eq!(rep.kept, vec![(0, 0), (1, 1), (0, 2)]);
        assert!((rep.achieved_rms - target).abs() < 1e-9);
    }

    #[test]
    fn redundancy_arithmetic() {
        assert!((ec_zone_redundancy(0.275, 0.164).unwrap() - 1.677).abs() < 0.001);
        assert_eq!(ec_zone_redundancy(0.2, 0.2).unwrap(), 1.0);
        assert!((ec_zone_redundancy(0.32, 0.16).unwrap() - 2.0).abs() < 1e-15);
        assert!(ec_zone_redundancy(0.3, 0.0).is_err());
    }

    // Newton's method on r + 2 ln(r s) = 0, independent of the bisection.
    fn newton_root(s: f64) -> f64 {
        let mut r = 5.0;
        for _ in 0..100 {
            let g = r + 2.0 * (r * s).ln();
            r -= g / (1.0 + 2.0 / r);
        }
        r
    }

    #[test]
    fn cs_bound_examples() {
        for (s, approx) in [(0.1, 2.65), (0.002, 8.2)] {
            let b = cs_required_redundancy(s).unwrap();
            assert!(!b.clamped);
            assert!((b.redundancy - newton_root(s)).abs() < 1e-9);
            assert!((b.redundancy - approx).abs() < 0.05, "{s}: {}", b.redundancy);
            let r = b.redundancy;
            assert!((r + 2.0 * (r * s).ln()).abs() < 1e-9);
        }
        let b = cs_required_redundancy((-0.5f64).exp()).unwrap();
        assert!((b.redundancy - 1.0).abs() < 1e-9);
        let b = cs_required_redundancy(0.9).unwrap();
        assert!(b.clamped && b.redundancy == 1.0);
        assert!(cs_required_redundancy(0.0).is_err());
        assert!(cs_required_redundancy(1.0).is_err());
    }

    #[test]
    fn cs_bound_decreasing_on_tested_range() {
        let mut prev = f64::INFINITY;
        let mut s = 2e-3;
        while s <= 0.5 {
            let r = cs_required_redundancy(s).unwrap().redundancy;
            assert!(r < prev, "{s}");
            prev = r;
            s *= 1.05;
        }
    }

    fn pseudo_image(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut x = seed | 1;
        ImageGrid::from_fn(h, w, |r, c| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            ((r * 7 + c * 3) % 50) as f64 + (x % 40) as f64
        })
        .unwrap()
    }

    #[test]
    fn rms_fit_meets_target() {
        let img = pseudo_image(32, 32, 5);
        let spec = dct2(&img);
        let t = corner(ZoneFamily::Ellipse).with_aspect_ratio(0.7);
        let (shape, mask) = fit_zone_to_rms(&t, &spec, 6.0).unwrap();
        let mut c = spec.real().unwrap().to_vec();
        mask.apply(&mut c);
        let approx = idct2(&SpectrumGrid::from_dct(32, 32, c).unwrap()).unwrap();
        assert!(crate::metrics::rms_error(&approx, &img).unwrap() <= 6.0 + 1e-9);
        // a slightly smaller zone misses the target
        let smaller = build_zone_mask(&shape.with_scale(shape.scale() * 0.97), 32, 32).unwrap();
        if smaller.count() < mask.count() {
            let mut c = spec.real().unwrap().to_vec();
            smaller.apply(&mut c);
            let approx = idct2(&SpectrumGrid::from_dct(32, 32, c).unwrap()).unwrap();
            assert!(crate::metrics::rms_error(&approx, &img).unwrap() > 6.0);
        }
    }

    #[test]
    fn energy_fit_on_constant_image_is_dc_only() {
        let img = ImageGrid::filled(16, 16, 10.0).unwrap();
        let spec = crate::transforms::dft2(&img);
        let t = ZoneShape::new(ZoneFamily::Ellipse, ZoneAnchor::Centered);
        let (_, mask) = fit_zone_to_energy(&t, &spec, 0.995).unwrap();
        assert_eq!(mask.count(), 1);
        assert!(mask.get(8, 8));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sparse_reconstruction_matches_reported_rms(seed in any::<u64>(), target in 0.0f64..20.0) {
            let img = pseudo_image(12, 10, seed);
            let spec = dct2(&img);
            let rep = sparse_spectrum_of(&spec, target).unwrap();
            let mut c = spec.real().unwrap().to_vec();
            rep.kept_mask().apply(&mut c);
            let approx = idct2(&SpectrumGrid::from_dct(12, 10, c).unwrap()).unwrap();
            let rms = crate::metrics::rms_error(&approx, &img).unwrap();
            prop_assert!((rms - rep.achieved_rms).abs() < 1e-9);
            prop_assert!(rep.achieved_rms <= target + 1e-9);
            if rep.k > 0 {
                // dropping the weakest kept coefficient breaks the target
                let dropped = (rep.achieved_rms.powi(2) * 120.0 + rep.kept_energies[rep.k - 1]) / 120.0;
                prop_assert!(dropped.sqrt() > target * (1.0 - 1e-6));
            }
        }

        #[test]
        fn sparse_k_monotone(seed in any::<u64>(), t1 in 0.0f64..20.0, dt in 0.0f64..10.0) {
            let img = pseudo_image(8, 8, seed);
            let a = sparse_spectrum(&img, t1).unwrap().k;
            let b = sparse_spectrum(&img, t1 + dt).unwrap().k;
            prop_assert!(b <= a);
        }

        #[test]
        fn mask_fraction_monotone_in_scale(
            fam in 0usize..4, rho in 0.2f64..5.0, s in 0.0f64..1.5, ds in 0.0f64..0.5,
            centered in any::<bool>(), theta in -1.5f64..1.5,
        ) {
            let anchor = if centered { ZoneAnchor::Centered } else { ZoneAnchor::DcCorner };
            let mut t = ZoneShape::new(ZoneFamily::ALL[fam], anchor).with_aspect_ratio(rho);
            if centered { t = t.with_orientation(theta); }
            let a = build_zone_mask(&t.with_scale(s), 24, 20).unwrap();
            let b = build_zone_mask(&t.with_scale(s + ds), 24, 20).unwrap();
            prop_assert!(a.bits().iter().zip(b.bits()).all(|(x, y)| !x || *y));
        }

        #[test]
        fn energy_fraction_in_unit_interval(seed in any::<u64>(), s in 0.0f64..1.2) {
            let spec = dct2(&pseudo_image(16, 16, seed));
            let m = build_zone_mask(&corner(ZoneFamily::Ellipse).with_scale(s), 16, 16).unwrap();
            let f = energy_fraction_in_mask(&spec, &m).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
