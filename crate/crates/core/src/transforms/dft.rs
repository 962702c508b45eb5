//! Unitary 2D DFT with the DC term moved to the raster center.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::dct::{transpose, transpose_into};

pub struct Dft2Plan {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Dft2Plan {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major raster to centered spectrum, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.separable(data, &self.row_fwd, &self.col_fwd);
        shift(data, self.height, self.width, false);
    }

    /// Centered spectrum back to the raster, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        shift(data, self.height, self.width, true);
        self.separable(data, &self.row_inv, &self.col_inv);
    }

    fn separable(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "raster size mismatch");
        run_rows(data, w, rows);
        let mut t = transpose(data, h, w);
        run_rows(&mut t, h, cols);
        transpose_into(&t, w, h, data);
        let norm = 1.0 / ((h * w) as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= norm);
    }
}

fn run_rows(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(len).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

/// Circular shift moving index 0 to `(h/2, w/2)`; `inverse` undoes it.
fn shift(data: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let src = data.to_vec();
    let (dr, dc) = (h / 2, w / 2);
    for r in 0..h {
        for c in 0..w {
            let (sr, sc) = ((r + dr) % h, (c + dc) % w);
            if inverse {
                data[r * w + c] = src[sr * w + sc];
            } else {
                data[sr * w + sc] = src[r * w + c];
            }
        }
    }
}

/// Index of the spectral partner `-k` of centered position `p` along an axis of length `n`.
pub fn conjugate_index(p: usize, n: usize) -> usize {
    let half = n / 2;
    // frequency k = p - half; partner frequency -k
    (2 * half + n - p) % n
}
