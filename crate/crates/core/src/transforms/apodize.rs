use std::f64::consts::PI;

use crate::error::{out_of_range, Result};
use crate::image::ImageGrid;

/// Radial raised-cosine window, flat out to `flat_radius` and zero beyond
/// `outer_radius`. Radii are relative to half the shorter image side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Apodization {
    flat_radius: f64,
    outer_radius: f64,
}

impl Default for Apodization {
    fn default() -> Self {
        Self {
            flat_radius: 0.6,
            outer_radius: 1.0,
        }
    }
}

impl Apodization {
    pub fn new(flat_radius: f64, outer_radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&flat_radius) {
            return Err(out_of_range(
                "flat_radius",
                format!("{flat_radius} not in [0, 1)"),
            ));
        }
        if !(outer_radius > flat_radius && outer_radius <= 1.0) {
            return Err(out_of_range(
                "outer_radius",
                format!("{outer_radius} not in ({flat_radius}, 1]"),
            ));
        }
        Ok(Self {
            flat_radius,
            outer_radius,
        })
    }

    pub fn weight(&self, r: f64) -> f64 {
        if r <= self.flat_radius {
            1.0
        } else if r <= self.outer_radius {
            let t = (r - self.flat_radius) / (self.outer_radius - self.flat_radius);
            0.5 * (1.0 + (PI * t).cos())
        } else {
            0.0
        }
    }

    pub fn apply(&self, img: &ImageGrid) -> ImageGrid {
        let (h, w) = img.dims();
        let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
        let half = h.min(w) as f64 / 2.0;
        let data = img
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (r, c) = ((i / w) as f64, (i % w) as f64);
                let rad = ((r - cy).powi(2) + (c - cx).powi(2)).sqrt() / half;
                v * self.weight(rad)
            })
            .collect();
        ImageGrid::from_raw(h, w, data)
    }
}

pub fn apodize(img: &ImageGrid, flat_radius: f64, outer_radius: f64) -> Result<ImageGrid> {
    Ok(Apodization::new(flat_radius, outer_radius)?.apply(img))
}
