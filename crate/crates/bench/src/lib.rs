//! Shared fixtures for the criterion benches.

use nnr_core::ImageGrid;

/// Smooth test pattern with some texture, deterministic in `(h, w)`.
pub fn test_image(height: usize, width: usize) -> ImageGrid {
    ImageGrid::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 / height as f64, c as f64 / width as f64);
        128.0 + 60.0 * (6.0 * x + 2.0 * y).sin() + 30.0 * (17.0 * x * y).cos() + 10.0 * ((r * 7 + c * 13) % 11) as f64 / 11.0
    })
    .expect("positive dimensions")
}
