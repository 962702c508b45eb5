//! Orthonormal DCT-II / DCT-III computed through a same-length complex FFT.
//!
//! The input is permuted into `v = [x0, x2, x4, …, x5, x3, x1]`, transformed,
//! and rotated by `exp(-iπk/2n)`; the real part is the unnormalized DCT-II.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Dct1d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // exp(-iπk / 2n)
    twiddle: Vec<Complex64>,
    alpha: Vec<f64>,
    scratch_len: usize,
}

impl Dct1d {
    pub(crate) fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let twiddle = (0..n)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64)))
            .collect();
        let alpha = (0..n)
            .map(|k| {
                if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                }
            })
            .collect();
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            twiddle,
            alpha,
            scratch_len,
        }
    }

    fn buffers(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (
            vec![Complex64::default(); self.n],
            vec![Complex64::default(); self.scratch_len],
        )
    }

    fn forward(&self, x: &mut [f64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n.div_ceil(2) {
            buf[k] = Complex64::new(x[2 * k], 0.0);
        }
        for k in 0..n / 2 {
            buf[n - 1 - k] = Complex64::new(x[2 * k + 1], 0.0);
        }
        self.forward.process_with_scratch(buf, scratch);
        for k in 0..n {
            x[k] = self.alpha[k] * (buf[k] * self.twiddle[k]).re;
        }
    }

    fn inverse(&self, x: &mut [f64], buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let n = self.n;
        let raw = |k: usize| if k == n { 0.0 } else { x[k] / self.alpha[k] };
        for k in 0..n {
            buf[k] = Complex64::new(raw(k), -raw(n - k)) * self.twiddle[k].conj();
        }
        self.inverse.process_with_scratch(buf, scratch);
        let inv_n = 1.0 / n as f64;
        for k in 0..n.div_ceil(2) {
            x[2 * k] = buf[k].re * inv_n;
        }
        for k in 0..n / 2 {
            x[2 * k + 1] = buf[n - 1 - k].re * inv_n;
        }
    }

    fn run_rows(&self, data: &mut [f64], inverse: bool) {
        data.par_chunks_mut(self.n)
            .for_each_init(|| self.buffers(), |(buf, scratch), row| {
                if inverse {
                    self.inverse(row, buf, scratch);
                } else {
                    self.forward(row, buf, scratch);
                }
            });
    }
}

/// Reusable separable 2D DCT plan for a fixed raster size.
pub struct Dct2Plan {
    height: usize,
    width: usize,
    rows: Dct1d,
    cols: Dct1d,
}

impl Dct2Plan {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            rows: Dct1d::new(width, &mut planner),
            cols: Dct1d::new(height, &mut planner),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// In-place orthonormal DCT-II of a row-major raster.
    pub fn forward(&self, data: &mut [f64]) {
        self.apply(data, false);
    }

    /// In-place inverse (orthonormal DCT-III).
    pub fn inverse(&self, data: &mut [f64]) {
        self.apply(data, true);
    }

    fn apply(&self, data: &mut [f64], inverse: bool) {
        assert_eq!(data.len(), self.height * self.width, "raster size mismatch");
        self.rows.run_rows(data, inverse);
        let mut t = transpose(data, self.height, self.width);
        self.cols.run_rows(&mut t, inverse);
        transpose_into(&t, self.width, self.height, data);
    }
}

pub(crate) fn transpose<T: Copy + Default>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut dst = vec![T::default(); src.len()];
    transpose_into(src, rows, cols, &mut dst);
    dst
}

pub(crate) fn transpose_into<T: Copy>(src: &[T], rows: usize, cols: usize, dst: &mut [T]) {
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct O(n²) evaluation of the orthonormal DCT-II.
    fn direct_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let a = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                a * x
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * (PI * (2 * m + 1) as f64 * k as f64 / (2 * n) as f64).cos())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn matches_direct_formula_for_odd_and_even_lengths() {
        let mut planner = FftPlanner::new();
        for n in [1usize, 2, 3, 5, 8, 13, 16] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
            let plan = Dct1d::new(n, &mut planner);
            let (mut buf, mut scratch) = plan.buffers();
            let mut y = x.clone();
            plan.forward(&mut y, &mut buf, &mut scratch);
            for (a, b) in y.iter().zip(direct_dct(&x)) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
            plan.inverse(&mut y, &mut buf, &mut scratch);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).abs() < 1e-10, "n={n} inverse");
            }
        }
    }

    #[test]
    fn two_point_example() {
        let plan = Dct2Plan::new(1, 2);
        let mut x = vec![1.0, 0.0];
        plan.forward(&mut x);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x[0] - h).abs() < 1e-15 && (x[1] - h).abs() < 1e-15, "{x:?}");
    }

    #[test]
    fn transpose_rectangular() {
        let src: Vec<u32> = (0..6).collect();
        assert_eq!(transpose(&src, 2, 3), vec![0, 3, 1, 4, 2, 5]);
    }
}
