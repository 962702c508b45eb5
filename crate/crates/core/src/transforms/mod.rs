//! 2D orthonormal DCT, unitary centered DFT, and circular apodization.
//!
//! Both transforms preserve energy (`Σ pixel² = Σ |coefficient|²`), so the
//! energy of discarded coefficients divided by `N` is exactly the resulting
//! mean squared reconstruction error.

mod apodize;
mod dct;
mod dft;

pub use apodize::{apodize, Apodization};
pub use dct::Dct2Plan;
pub use dft::{conjugate_index, Dft2Plan};
pub use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::ImageGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Real DCT-II coefficients, DC at `(0, 0)`.
    Dct,
    /// Complex DFT coefficients, DC at `(h/2, w/2)`.
    Dft,
}

impl SpectrumKind {
    fn name(self) -> &'static str {
        match self {
            Self::Dct => "DCT",
            Self::Dft => "DFT",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Coefficients {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Transform coefficients of an `height × width` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    height: usize,
    width: usize,
    coeffs: Coefficients,
}

impl SpectrumGrid {
    pub fn from_dct(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_len(height, width, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage("non-finite DCT coefficient".into()));
        }
        Ok(Self {
            height,
            width,
            coeffs: Coefficients::Real(data),
        })
    }

    pub fn from_dft(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        check_len(height, width, data.len())?;
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidImage("non-finite DFT coefficient".into()));
        }
        Ok(Self {
            height,
            width,
            coeffs: Coefficients::Complex(data),
        })
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

    pub fn kind(&self) -> SpectrumKind {
        match self.coeffs {
            Coefficients::Real(_) => SpectrumKind::Dct,
            Coefficients::Complex(_) => SpectrumKind::Dft,
        }
    }

    pub fn real(&self) -> Result<&[f64]> {
        match &self.coeffs {
            Coefficients::Real(v) => Ok(v),
            Coefficients::Complex(_) => Err(kind_mismatch(SpectrumKind::Dct, SpectrumKind::Dft)),
        }
    }

    pub fn complex(&self) -> Result<&[Complex64]> {
        match &self.coeffs {
            Coefficients::Complex(v) => Ok(v),
            Coefficients::Real(_) => Err(kind_mismatch(SpectrumKind::Dft, SpectrumKind::Dct)),
        }
    }

    /// `|c|²` per coefficient, row-major.
    pub fn energies(&self) -> Vec<f64> {
        match &self.coeffs {
            Coefficients::Real(v) => v.iter().map(|c| c * c).collect(),
            Coefficients::Complex(v) => v.iter().map(|c| c.norm_sqr()).collect(),
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.energies().iter().sum()
    }
}

fn check_len(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 || len != height * width {
        return Err(Error::InvalidImage(format!(
            "spectrum of {len} coefficients does not fit {height}x{width}"
        )));
    }
    Ok(())
}

fn kind_mismatch(expected: SpectrumKind, found: SpectrumKind) -> Error {
    Error::KindMismatch {
        expected: expected.name(),
        found: found.name(),
    }
}

pub fn dct2(img: &ImageGrid) -> SpectrumGrid {
    let (h, w) = img.dims();
    let mut data = img.data().to_vec();
    Dct2Plan::new(h, w).forward(&mut data);
    SpectrumGrid {
        height: h,
        width: w,
        coeffs: Coefficients::Real(data),
    }
}

pub fn idct2(spec: &SpectrumGrid) -> Result<ImageGrid> {
    let mut data = spec.real()?.to_vec();
    Dct2Plan::new(spec.height, spec.width).inverse(&mut data);
    Ok(ImageGrid::from_raw(spec.height, spec.width, data))
}

pub fn dft2(img: &ImageGrid) -> SpectrumGrid {
    let (h, w) = img.dims();
    let mut data: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Dft2Plan::new(h, w).forward(&mut data);
    SpectrumGrid {
        height: h,
        width: w,
        coeffs: Coefficients::Complex(data),
    }
}

/// Result of an inverse DFT: the real part plus the largest discarded
/// imaginary magnitude.
#[derive(Debug, Clone)]
pub struct InverseDft {
    pub image: ImageGrid,
    pub max_imag: f64,
}

pub fn idft2(spec: &SpectrumGrid) -> Result<InverseDft> {
    let mut data = spec.complex()?.to_vec();
    Dft2Plan::new(spec.height, spec.width).inverse(&mut data);
    let max_imag = data.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let real = data.iter().map(|c| c.re).collect();
    Ok(InverseDft {
        image: ImageGrid::from_raw(spec.height, spec.width, real),
        max_imag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(h: usize, w: usize, seed: u64) -> ImageGrid {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ImageGrid::from_fn(h, w, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        })
        .unwrap()
    }

    #[test]
    fn dct_constant_image() {
        let img = ImageGrid::filled(2, 2, 10.0).unwrap();
        let s = dct2(&img);
        let c = s.real().unwrap();
        assert!((c[0] - 20.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn idct_examples() {
        let zero = SpectrumGrid::from_dct(3, 4, vec![0.0; 12]).unwrap();
        assert!(idct2(&zero).unwrap().data().iter().all(|&v| v == 0.0));

        let mut dc = vec![0.0; 16];
        dc[0] = 1.0;
        let img = idct2(&SpectrumGrid::from_dct(4, 4, dc).unwrap()).unwrap();
        assert!(img.data().iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let img = noise(4, 4, 1);
        assert!(matches!(idct2(&dft2(&img)), Err(Error::KindMismatch { .. })));
        assert!(matches!(idft2(&dct2(&img)), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn dft_constant_image_has_centered_dc() {
        let img = ImageGrid::filled(4, 4, 3.0).unwrap();
        let s = dft2(&img);
        let c = s.complex().unwrap();
        for (i, v) in c.iter().enumerate() {
            let expected = if i == 2 * 4 + 2 { 12.0 } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-12 && v.im.abs() < 1e-12, "{i}: {v}");
        }
    }

    #[test]
    fn real_input_has_hermitian_centered_spectrum() {
        for (h, w) in [(6, 8), (5, 7), (4, 5)] {
            let s = dft2(&noise(h, w, 3));
            let c = s.complex().unwrap();
            for r in 0..h {
                for col in 0..w {
                    let p = c[r * w + col];
                    let q = c[conjugate_index(r, h) * w + conjugate_index(col, w)];
                    assert!((p - q.conj()).norm() < 1e-9, "{h}x{w} at ({r},{col})");
                }
            }
        }
    }

    #[test]
    fn idft_reports_imaginary_residual() {
        let mut c = vec![Complex64::default(); 16];
        c[2 * 4 + 3] = Complex64::new(1.0, 0.0);
        let inv = idft2(&SpectrumGrid::from_dft(4, 4, c).unwrap()).unwrap();
        assert!(inv.max_imag > 0.1);
        let real = idft2(&dft2(&noise(4, 4, 9))).unwrap();
        assert!(real.max_imag < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trips_and_parseval(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
            let img = noise(h, w, seed);
            let e: f64 = img.data().iter().map(|v| v * v).sum();

            let s = dct2(&img);
            prop_assert!((s.total_energy() - e).abs() <= 1e-9 * e);
            let back = idct2(&s).unwrap();
            for (a, b) in back.data().iter().zip(img.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let again = dct2(&back);
            for (a, b) in again.real().unwrap().iter().zip(s.real().unwrap()) {
                prop_assert!((a - b).abs() < 1e-9);
            }

            let f = dft2(&img);
            prop_assert!((f.total_energy() - e).abs() <= 1e-9 * e);
            let back = idft2(&f).unwrap();
            prop_assert!(back.max_imag < 1e-9);
            for (a, b) in back.image.data().iter().zip(img.data()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn transforms_are_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let x = noise(6, 9, seed);
            let y = noise(6, 9, seed ^ 0xdead_beef);
            let combo = ImageGrid::from_fn(6, 9, |r, c| a * x.get(r, c) + b * y.get(r, c)).unwrap();
            let (sx, sy, sc) = (dct2(&x), dct2(&y), dct2(&combo));
            for ((p, q), r) in sx.real().unwrap().iter().zip(sy.real().unwrap()).zip(sc.real().unwrap()) {
                prop_assert!((a * p + b * q - r).abs() < 1e-9);
            }
            let (fx, fy, fc) = (dft2(&x), dft2(&y), dft2(&combo));
            for ((p, q), r) in fx.complex().unwrap().iter().zip(fy.complex().unwrap()).zip(fc.complex().unwrap()) {
                prop_assert!((p * a + q * b - r).norm() < 1e-9);
            }
        }
    }
}
