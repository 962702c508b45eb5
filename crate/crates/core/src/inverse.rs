//! Applications of the projection engine: in-painting of occluded pixels,
//! reconstruction from a sampled Fourier spectrum, and phase retrieval from
//! the Fourier modulus with a known occlusion mask.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{out_of_range, Error, Result};
use crate::image::ImageGrid;
use crate::metrics::{rms_error, trimmed_rms};
use crate::reconstruct::{gp_reconstruct, GpOptions, Reconstruction, ReconstructionTrace, TraceRecord};
use crate::sampler::{GridKind, Position, SampleSet};
use crate::transforms::{Complex64, Dft2Plan, SpectrumGrid};
use crate::zones::SpectralMask;

/// Image-domain binary mask: `true` where the pixel is observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcclusionMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl OcclusionMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "{} mask bits do not fit {height}x{width}",
                bits.len()
            )));
        }
        Ok(Self { height, width, bits })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let bits = (0..height * width).map(|i| f(i / width.max(1), i % width.max(1))).collect();
        Self::new(height, width, bits)
    }

    pub fn all_observed(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![true; height * width])
    }

    /// Pixels at or above mid-gray are observed.
    pub fn from_image(img: &ImageGrid) -> Self {
        Self {
            height: img.height(),
            width: img.width(),
            bits: img.data().iter().map(|&v| v >= 128.0).collect(),
        }
    }

    /// 255 where observed, 0 where occluded.
    pub fn to_image(&self) -> ImageGrid {
        let data = self.bits.iter().map(|&b| if b { 255.0 } else { 0.0 }).collect();
        ImageGrid::from_raw(self.height, self.width, data)
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

    pub fn observed_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn observed_fraction(&self) -> f64 {
        self.observed_count() as f64 / self.bits.len() as f64
    }

    pub fn observed_positions(&self) -> Vec<Position> {
        (0..self.bits.len())
            .filter(|&i| self.bits[i])
            .map(|i| (i / self.width, i % self.width))
            .collect()
    }

    /// Zeroes occluded pixels.
    pub fn apply(&self, img: &ImageGrid) -> Result<ImageGrid> {
        self.check(img.dims())?;
        let data = img
            .data()
            .iter()
            .zip(&self.bits)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect();
        Ok(ImageGrid::from_raw(self.height, self.width, data))
    }

    /// Observed everywhere except `count` randomly placed `side × side`
    /// opaque squares (which may overlap).
    pub fn random_squares(height: usize, width: usize, side: usize, count: usize, seed: u64) -> Result<Self> {
        if side == 0 || side > height || side > width {
            return Err(out_of_range("side", format!("{side} does not fit {height}x{width}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bits = vec![true; height * width];
        for _ in 0..count {
            let r0 = rand::Rng::random_range(&mut rng, 0..=height - side);
            let c0 = rand::Rng::random_range(&mut rng, 0..=width - side);
            for r in r0..r0 + side {
                for c in c0..c0 + side {
                    bits[r * width + c] = false;
                }
            }
        }
        Self::new(height, width, bits)
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        if dims != (self.height, self.width) {
            return Err(Error::DimensionMismatch {
                expected: (self.height, self.width),
                found: dims,
            });
        }
        Ok(())
    }
}

/// Bounded-spectrum reconstruction using only the observed pixels.
pub fn inpaint(
    img: &ImageGrid,
    occlusion: &OcclusionMask,
    zone: &SpectralMask,
    opts: &GpOptions,
    truth: Option<&ImageGrid>,
) -> Result<Reconstruction> {
    occlusion.check(img.dims())?;
    let positions = occlusion.observed_positions();
    if positions.is_empty() {
        return Err(Error::FullyOccluded);
    }
    let values = positions.iter().map(|&(r, c)| img.get(r, c)).collect();
    let samples = SampleSet::new(img.height(), img.width(), positions, values, GridKind::External, 0)?;
    gp_reconstruct(&samples, zone, opts, truth)
}

/// Disk of radius `support_radius · min(H, W)` pixels around the image center.
pub fn support_disk(height: usize, width: usize, support_radius: f64) -> Result<OcclusionMask> {
    check_radius("support_radius", support_radius)?;
    let (cy, cx) = ((height as f64 - 1.0) / 2.0, (width as f64 - 1.0) / 2.0);
    let rad = support_radius * height.min(width) as f64;
    OcclusionMask::from_fn(height, width, |r, c| {
        (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) <= rad * rad
    })
}

/// Centered-DFT positions strictly inside the circle of radius
/// `bound_radius · min(H, W) / 2` around DC.
pub fn bound_disk(height: usize, width: usize, bound_radius: f64) -> Result<SpectralMask> {
    check_radius("bound_radius", bound_radius)?;
    let (cy, cx) = ((height / 2) as f64, (width / 2) as f64);
    let rad = bound_radius * height.min(width) as f64 / 2.0;
    Ok(SpectralMask::from_fn(height, width, |r, c| {
        (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) < rad * rad
    }))
}

fn check_radius(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(out_of_range(name, format!("{v} not in (0, 1]")))
    }
}

/// Support-circle area fraction (capped at 1) times the spectral bounding
/// circle's area fraction.
pub fn spectral_sampling_rate(height: usize, width: usize, support_radius: f64, bound_radius: f64) -> Result<f64> {
    check_radius("support_radius", support_radius)?;
    check_radius("bound_radius", bound_radius)?;
    let n = (height * width) as f64;
    let side = height.min(width) as f64;
    let support = (PI * (support_radius * side).powi(2) / n).min(1.0);
    let bound = PI * (bound_radius * side / 2.0).powi(2) / n;
    Ok(support * bound)
}

/// Randomly chosen complex DFT samples of a support-confined image.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSampleSet {
    pub height: usize,
    pub width: usize,
    pub positions: Vec<Position>,
    pub values: Vec<Complex64>,
    pub support_radius: f64,
    pub bound_radius: f64,
    pub seed: u64,
}

impl SpectralSampleSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `# H W M support bound seed`, then `row,col,re,im` lines.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {} {} {} {} {} {}\nrow,col,re,im\n",
            self.height,
            self.width,
            self.len(),
            self.support_radius,
            self.bound_radius,
            self.seed
        );
        for (&(r, c), v) in self.positions.iter().zip(&self.values) {
            let _ = writeln!(out, "{r},{c},{},{}", v.re, v.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Csv { line, message };
        let mut lines = text.lines().enumerate();
        let meta: Vec<&str> = lines
            .next()
            .and_then(|(_, l)| l.strip_prefix('#'))
            .ok_or_else(|| err(1, "missing `# H W M support bound seed` line".into()))?
            .split_whitespace()
            .collect();
        if meta.len() != 6 {
            return Err(err(1, format!("expected 6 metadata fields, got {}", meta.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(1, format!("`{s}`: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| err(1, format!("`{s}`: {e}")));
        let (height, width, m) = (int(meta[0])? as usize, int(meta[1])? as usize, int(meta[2])? as usize);
        let (support_radius, bound_radius, seed) = (real(meta[3])?, real(meta[4])?, int(meta[5])?);
        match lines.next() {
            Some((_, h)) if h.trim() == "row,col,re,im" => {}
            _ => return Err(err(2, "expected header `row,col,re,im`".into())),
        }
        let mut positions = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err(i + 1, format!("expected 4 fields, got {}", f.len())));
            }
            let bad = |e: &dyn std::fmt::Display| err(i + 1, e.to_string());
            let r: usize = f[0].parse().map_err(|e| bad(&e))?;
            let c: usize = f[1].parse().map_err(|e| bad(&e))?;
            let re: f64 = f[2].parse().map_err(|e| bad(&e))?;
            let im: f64 = f[3].parse().map_err(|e| bad(&e))?;
            if r >= height || c >= width {
                return Err(Error::PositionOutOfBounds {
                    row: r,
                    col: c,
                    height,
                    width,
                });
            }
            positions.push((r, c));
            values.push(Complex64::new(re, im));
        }
        if positions.len() != m {
            return Err(err(1, format!("metadata says {m} samples, found {}", positions.len())));
        }
        Ok(Self {
            height,
            width,
            positions,
            values,
            support_radius,
            bound_radius,
            seed,
        })
    }
}

/// Applies the support disk, takes the centered DFT and keeps
/// `round(rate · N)` random positions inside the bounding circle (all of
/// them if the circle holds fewer).
pub fn spectral_sample(img: &ImageGrid, support_radius: f64, bound_radius: f64, seed: u64) -> Result<SpectralSampleSet> {
    let (h, w) = img.dims();
    let rate = spectral_sampling_rate(h, w, support_radius, bound_radius)?;
    let support = support_disk(h, w, support_radius)?;
    let bound = bound_disk(h, w, bound_radius)?;
    let mut inside: Vec<usize> = (0..h * w).filter(|&i| bound.bits()[i]).collect();
    let m = ((rate * (h * w) as f64).round() as usize).min(inside.len());
    if m == 0 {
        return Err(out_of_range("support_radius", "sampling rate yields no samples"));
    }
    let spectrum = crate::transforms::dft2(&support.apply(img)?);
    let coeffs = spectrum.complex()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, _) = inside.partial_shuffle(&mut rng, m);
    let positions: Vec<Position> = picked.iter().map(|&i| (i / w, i % w)).collect();
    let values = picked.iter().map(|&i| coeffs[i]).collect();
    Ok(SpectralSampleSet {
        height: h,
        width: w,
        positions,
        values,
        support_radius,
        bound_radius,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct SpectralReconstruction {
    pub image: ImageGrid,
    pub trace: ReconstructionTrace,
    /// Largest imaginary magnitude dropped when taking the real output.
    pub max_imag: f64,
}

/// Alternates between the image support disk (with realness) and the
/// measured, circle-bounded spectrum.
pub fn spectral_reconstruct(
    ss: &SpectralSampleSet,
    opts: &GpOptions,
    truth: Option<&ImageGrid>,
) -> Result<SpectralReconstruction> {
    let (h, w) = (ss.height, ss.width);
    if let Some(t) = truth {
        if t.dims() != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: (h, w),
                found: t.dims(),
            });
        }
    }
    if opts.max_iters == 0 {
        return Err(out_of_range("max_iters", "must be at least 1"));
    }
    let support = support_disk(h, w, ss.support_radius)?;
    let bound = bound_disk(h, w, ss.bound_radius)?;
    let plan = Dft2Plan::new(h, w);
    let n = (h * w) as f64;

    let reimpose = |s: &mut [Complex64]| {
        for (&(r, c), &v) in ss.positions.iter().zip(&ss.values) {
            s[r * w + c] = v;
        }
        for (v, &b) in s.iter_mut().zip(bound.bits()) {
            if !b {
                *v = Complex64::default();
            }
        }
    };
    let real_image = |s: &[Complex64]| {
        let mut z = s.to_vec();
        plan.inverse(&mut z);
        let max_imag = z.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        (ImageGrid::from_raw(h, w, z.iter().map(|c| c.re).collect()), max_imag)
    };

    let mut s = vec![Complex64::default(); h * w];
    reimpose(&mut s);
    let mut z = vec![Complex64::default(); h * w];
    let mut trace = ReconstructionTrace::default();
    for iter in 1..=opts.max_iters {
        z.copy_from_slice(&s);
        plan.inverse(&mut z);
        for (v, &b) in z.iter_mut().zip(support.bits()) {
            *v = if b { Complex64::new(v.re, 0.0) } else { Complex64::default() };
        }
        plan.forward(&mut z);
        reimpose(&mut z);
        // unitary transform: spectral change equals image-domain change
        let delta = (s.iter().zip(&z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n).sqrt();
        std::mem::swap(&mut s, &mut z);
        let (rms_total, rms_trim) = match truth {
            Some(t) => {
                let (cur, _) = real_image(&s);
                (
                    Some(rms_error(&cur, t)?),
                    Some(trimmed_rms(&cur, t, opts.keep_fraction)?),
                )
            }
            None => (None, None),
        };
        trace.records.push(TraceRecord {
            iter,
            rms_total,
            rms_trim,
            delta_rms: delta,
        });
        if delta < opts.stop_delta {
            break;
        }
    }
    let (image, max_imag) = real_image(&s);
    Ok(SpectralReconstruction {
        image: ImageGrid::new(h, w, image.into_data())?,
        trace,
        max_imag,
    })
}

/// Non-negative Fourier modulus in centered DFT layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierModulus {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FourierModulus {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "modulus of {} values does not fit {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(out_of_range("modulus", "must be finite and non-negative"));
        }
        Ok(Self { height, width, data })
    }

    pub fn from_spectrum(spectrum: &SpectrumGrid) -> Result<Self> {
        let data = spectrum.complex()?.iter().map(|c| c.norm()).collect();
        Self::new(spectrum.height(), spectrum.width(), data)
    }

    pub fn of_image(img: &ImageGrid) -> Result<Self> {
        Self::from_spectrum(&crate::transforms::dft2(img))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseOptions {
    pub max_iters: usize,
    /// Clamp negative pixels to zero in the image-domain step.
    pub nonnegative: bool,
    /// Starting phase in centered layout; defaults to the phase of the mask's DFT.
    pub initial_phase: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct PhaseRetrieval {
    pub image: ImageGrid,
    /// `RMS(|dft2(z)| - modulus)` after each iteration's image-domain step.
    pub residuals: Vec<f64>,
}

/// Error-reduction phase retrieval with the occlusion mask as the
/// image-domain constraint. Returns the masked image estimate.
pub fn phase_retrieve_masked(modulus: &FourierModulus, mask: &OcclusionMask, opts: &PhaseOptions) -> Result<PhaseRetrieval> {
    let (h, w) = modulus.dims();
    mask.check((h, w))?;
    if mask.observed_count() == 0 {
        return Err(Error::FullyOccluded);
    }
    if opts.max_iters == 0 {
        return Err(out_of_range("max_iters", "must be at least 1"));
    }
    let plan = Dft2Plan::new(h, w);
    let n = (h * w) as f64;
    let mut phase: Vec<f64> = match &opts.initial_phase {
        Some(p) if p.len() == h * w => p.clone(),
        Some(p) => {
            return Err(Error::DimensionMismatch {
                expected: (h, w),
                found: (p.len() / w.max(1), w),
            })
        }
        None => {
            let mut m: Vec<Complex64> = mask
                .bits()
                .iter()
                .map(|&b| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0))
                .collect();
            plan.forward(&mut m);
            m.iter().map(|c| c.arg()).collect()
        }
    };
    let mut z = vec![Complex64::default(); h * w];
    let mut residuals = Vec::with_capacity(opts.max_iters);
    for _ in 0..opts.max_iters {
        for ((v, &a), &p) in z.iter_mut().zip(modulus.data()).zip(&phase) {
            *v = Complex64::from_polar(a, p);
        }
        plan.inverse(&mut z);
        for (v, &b) in z.iter_mut().zip(mask.bits()) {
            let re = if opts.nonnegative { v.re.max(0.0) } else { v.re };
            *v = Complex64::new(if b { re } else { 0.0 }, 0.0);
        }
        let image: Vec<f64> = z.iter().map(|c| c.re).collect();
        plan.forward(&mut z);
        let resid = z
            .iter()
            .zip(modulus.data())
            .map(|(c, &a)| (c.norm() - a).powi(2))
            .sum::<f64>()
            / n;
        residuals.push(resid.sqrt());
        for (p, c) in phase.iter_mut().zip(&z) {
            *p = c.arg();
        }
        if residuals.len() == opts.max_iters {
            return Ok(PhaseRetrieval {
                image: ImageGrid::new(h, w, image)?,
                residuals,
            });
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Debug, Clone)]
pub struct FullPhaseRetrieval {
    pub stage1: PhaseRetrieval,
    pub stage2: Reconstruction,
}

/// Phase retrieval of the observed pixels, then in-painting of the occluded ones.
pub fn phase_retrieve_full(
    modulus: &FourierModulus,
    mask: &OcclusionMask,
    zone: &SpectralMask,
    phase_opts: &PhaseOptions,
    gp_opts: &GpOptions,
    truth: Option<&ImageGrid>,
) -> Result<FullPhaseRetrieval> {
    let stage1 = phase_retrieve_masked(modulus, mask, phase_opts)?;
    let stage2 = inpaint(&stage1.image, mask, zone, gp_opts, truth)?;
    Ok(FullPhaseRetrieval { stage1, stage2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruct::project_to_zone;
    use crate::transforms::dft2;
    use crate::zones::{build_zone_mask, fit_shape_to_fraction, ZoneAnchor, ZoneFamily, ZoneShape};

    fn noise(h: usize, w: usize, seed: u64) -> ImageGrid {
        ImageGrid::zeros(h, w).unwrap().with_gaussian_noise(40.0, seed).unwrap().map(|v| v + 128.0).unwrap()
    }

    fn quarter(h: usize, w: usize) -> SpectralMask {
        let t = ZoneShape::new(ZoneFamily::Rectangle, ZoneAnchor::DcCorner);
        build_zone_mask(&fit_shape_to_fraction(&t, 0.25, h, w).unwrap(), h, w).unwrap()
    }

    #[test]
    fn inpaint_full_observation_is_identity() {
        let img = noise(16, 12, 1);
        let occl = OcclusionMask::all_observed(16, 12).unwrap();
        let out = inpaint(&img, &occl, &quarter(16, 12), &GpOptions::default(), None).unwrap();
        assert_eq!(out.image.data(), img.data());
    }

    #[test]
    fn inpaint_single_hole() {
        let (h, w) = (32, 32);
        let mask = quarter(h, w);
        let truth = project_to_zone(&noise(h, w, 2), &mask).unwrap();
        let occl = OcclusionMask::from_fn(h, w, |r, c| (r, c) != (13, 20)).unwrap();
        let opts = GpOptions {
            max_iters: 500,
            stop_delta: 0.0,
            ..GpOptions::default()
        };
        let out = inpaint(&occl.apply(&truth).unwrap(), &occl, &mask, &opts, None).unwrap();
        assert!((out.image.get(13, 20) - truth.get(13, 20)).abs() < 0.1);
    }

    #[test]
    fn inpaint_rejects_fully_occluded() {
        let img = noise(4, 4, 0);
        let occl = OcclusionMask::new(4, 4, vec![false; 16]).unwrap();
        assert!(matches!(
            inpaint(&img, &occl, &quarter(4, 4), &GpOptions::default(), None),
            Err(Error::FullyOccluded)
        ));
    }

    #[test]
    fn occlusion_mask_pgm_convention() {
        let occl = OcclusionMask::random_squares(20, 20, 3, 5, 7).unwrap();
        let back = OcclusionMask::from_image(&occl.to_image());
        assert_eq!(back, occl);
        assert!(occl.observed_count() < 400);
    }

    #[test]
    fn sampling_rate_example() {
        let rate = spectral_sampling_rate(256, 256, 0.35, 1.0).unwrap();
        assert!((rate - PI * 0.35f64.powi(2) * PI / 4.0).abs() < 1e-12);
        assert!((rate - 0.302).abs() < 1e-3);
        let capped = spectral_sampling_rate(64, 64, 1.0, 1.0).unwrap();
        assert!((capped - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_positions_inside_bounding_circle() {
        let img = noise(64, 64, 3);
        let ss = spectral_sample(&img, 0.35, 1.0, 9).unwrap();
        assert_eq!(ss.len(), (spectral_sampling_rate(64, 64, 0.35, 1.0).unwrap() * 4096.0).round() as usize);
        let bound = bound_disk(64, 64, 1.0).unwrap();
        assert!(ss.positions.iter().all(|&(r, c)| bound.get(r, c)));
        let again = spectral_sample(&img, 0.35, 1.0, 9).unwrap();
        assert_eq!(again, ss);
        assert_eq!(SpectralSampleSet::from_csv(&ss.to_csv()).unwrap(), ss);
    }

    #[test]
    fn saturated_sampling_fills_the_circle() {
        let img = noise(32, 32, 4);
        let ss = spectral_sample(&img, 1.0, 1.0, 0).unwrap();
        assert_eq!(ss.len(), bound_disk(32, 32, 1.0).unwrap().count());
    }

    #[test]
    fn spectral_reconstruct_fully_measured_is_exact() {
        let (h, w) = (32, 32);
        let support = support_disk(h, w, 0.5).unwrap();
        let bound = bound_disk(h, w, 1.0).unwrap();
        // build a truth that satisfies both constraints closely enough: the
        // measured set covers the whole circle, so one pass reproduces it
        let base = support.apply(&noise(h, w, 5)).unwrap();
        let mut s = dft2(&base).complex().unwrap().to_vec();
        for (v, &b) in s.iter_mut().zip(bound.bits()) {
            if !b {
                *v = Complex64::default();
            }
        }
        let positions: Vec<Position> = (0..h * w).filter(|&i| bound.bits()[i]).map(|i| (i / w, i % w)).collect();
        let values = positions.iter().map(|&(r, c)| s[r * w + c]).collect();
        let ss = SpectralSampleSet {
            height: h,
            width: w,
            positions,
            values,
            support_radius: 0.5,
            bound_radius: 1.0,
            seed: 0,
        };
        let opts = GpOptions {
            max_iters: 1,
            ..GpOptions::default()
        };
        let out = spectral_reconstruct(&ss, &opts, None).unwrap();
        let plan = Dft2Plan::new(h, w);
        plan.inverse(&mut s);
        let expected = ImageGrid::new(h, w, s.iter().map(|c| c.re).collect()).unwrap();
        // the reimposed spectrum is exact on the circle and zero outside it
        let got = project_inverse(&out.image, &bound);
        let want = project_inverse(&expected, &bound);
        assert!(rms_error(&got, &want).unwrap() < 1e-6);
    }

    fn project_inverse(img: &ImageGrid, bound: &SpectralMask) -> ImageGrid {
        let (h, w) = img.dims();
        let mut s = dft2(img).complex().unwrap().to_vec();
        for (v, &b) in s.iter_mut().zip(bound.bits()) {
            if !b {
                *v = Complex64::default();
            }
        }
        Dft2Plan::new(h, w).inverse(&mut s);
        ImageGrid::new(h, w, s.iter().map(|c| c.re).collect()).unwrap()
    }

    #[test]
    fn spectral_reconstruct_zero_input() {
        let img = ImageGrid::zeros(16, 16).unwrap();
        let ss = spectral_sample(&img, 0.35, 1.0, 1).unwrap();
        let out = spectral_reconstruct(&ss, &GpOptions::default(), Some(&img)).unwrap();
        assert!(out.image.data().iter().all(|&v| v == 0.0));
        assert!(out.trace.records.iter().all(|r| r.rms_total == Some(0.0) && r.delta_rms == 0.0));
    }

    #[test]
    fn spectral_reconstruct_reimposes_measurements() {
        let img = noise(32, 32, 6);
        let ss = spectral_sample(&img, 0.35, 1.0, 2).unwrap();
        let opts = GpOptions {
            max_iters: 5,
            stop_delta: 0.0,
            ..GpOptions::default()
        };
        let out = spectral_reconstruct(&ss, &opts, None).unwrap();
        assert_eq!(out.trace.len(), 5);
        assert!(out.trace.records.iter().all(|r| r.delta_rms >= 0.0));
    }

    #[test]
    fn phase_retrieval_mask_as_image_converges_at_once() {
        let (h, w) = (32, 32);
        let mask = OcclusionMask::random_squares(h, w, 3, 12, 3).unwrap();
        let target = mask.to_image();
        let modulus = FourierModulus::of_image(&target).unwrap();
        let opts = PhaseOptions {
            max_iters: 3,
            ..PhaseOptions::default()
        };
        let out = phase_retrieve_masked(&modulus, &mask, &opts).unwrap();
        assert!(out.residuals[0] < 1e-9);
        assert!(rms_error(&out.image, &target).unwrap() < 1e-9);
    }

    #[test]
    fn phase_retrieval_zero_modulus() {
        let mask = OcclusionMask::random_squares(8, 8, 3, 2, 1).unwrap();
        let modulus = FourierModulus::new(8, 8, vec![0.0; 64]).unwrap();
        let opts = PhaseOptions {
            max_iters: 4,
            ..PhaseOptions::default()
        };
        let out = phase_retrieve_masked(&modulus, &mask, &opts).unwrap();
        assert!(out.image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn phase_retrieval_masks_opaque_pixels_and_lowers_residual() {
        let (h, w) = (32, 32);
        let mask = OcclusionMask::random_squares(h, w, 3, 15, 11).unwrap();
        let truth = project_to_zone(&noise(h, w, 11), &quarter(h, w)).unwrap();
        let modulus = FourierModulus::of_image(&mask.apply(&truth).unwrap()).unwrap();
        let opts = PhaseOptions {
            max_iters: 200,
            ..PhaseOptions::default()
        };
        let out = phase_retrieve_masked(&modulus, &mask, &opts).unwrap();
        for (i, &b) in mask.bits().iter().enumerate() {
            if !b {
                assert_eq!(out.image.data()[i], 0.0);
            }
        }
        assert!(out.residuals.last().unwrap() < &out.residuals[0]);
        for pair in out.residuals.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
    }

    #[test]
    fn full_pipeline_with_true_phase_matches_inpaint() {
        let (h, w) = (16, 16);
        let zone = quarter(h, w);
        let mask = OcclusionMask::random_squares(h, w, 3, 3, 2).unwrap();
        let truth = project_to_zone(&noise(h, w, 8), &zone).unwrap();
        let observed = mask.apply(&truth).unwrap();
        let spectrum = dft2(&observed);
        let phase = spectrum.complex().unwrap().iter().map(|c| c.arg()).collect();
        let modulus = FourierModulus::from_spectrum(&spectrum).unwrap();
        let popts = PhaseOptions {
            max_iters: 1,
            initial_phase: Some(phase),
            ..PhaseOptions::default()
        };
        let gopts = GpOptions {
            max_iters: 50,
            ..GpOptions::default()
        };
        let full = phase_retrieve_full(&modulus, &mask, &zone, &popts, &gopts, None).unwrap();
        assert!(rms_error(&full.stage1.image, &observed).unwrap() < 1e-9);
        let direct = inpaint(&full.stage1.image, &mask, &zone, &gopts, None).unwrap();
        assert_eq!(direct.image.data(), full.stage2.image.data());
    }
}
