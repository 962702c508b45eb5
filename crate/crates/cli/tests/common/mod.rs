#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nnr_core::reconstruct::project_to_zone;
use nnr_core::zones::{build_zone_mask, fit_shape_to_fraction, SpectralMask, ZoneAnchor, ZoneFamily, ZoneShape};
use nnr_core::{write_pgm, ImageGrid};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn nnr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnr"))
        .args(args)
        .output()
        .expect("nnr binary runs")
}

/// Runs `nnr` and returns stdout, panicking with stderr on failure.
pub fn nnr_ok(args: &[&str]) -> String {
    let out = nnr(args);
    assert!(
        out.status.success(),
        "nnr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

/// Value following `key` on the first stdout line that contains it.
pub fn field(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            while let Some(tok) = it.next() {
                if tok == key {
                    return it.next().and_then(|v| v.parse().ok());
                }
            }
            None
        })
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{stdout}"))
}

/// Pipeline summary row as (header, value) pairs.
pub fn summary(stdout: &str) -> Vec<(String, String)> {
    let mut lines = stdout.lines().skip_while(|l| !l.starts_with("image,"));
    let header = lines.next().expect("summary header");
    let row = lines.next().expect("summary row");
    header
        .split(',')
        .map(String::from)
        .zip(row.split(',').map(String::from))
        .collect()
}

pub fn summary_value(stdout: &str, key: &str) -> f64 {
    summary(stdout)
        .into_iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or_else(|| panic!("no numeric `{key}` in summary"))
}

pub fn zone(family: ZoneFamily, aspect: f64, fraction: f64, h: usize, w: usize) -> SpectralMask {
    let t = ZoneShape::new(family, ZoneAnchor::DcCorner).with_aspect_ratio(aspect);
    build_zone_mask(&fit_shape_to_fraction(&t, fraction, h, w).unwrap(), h, w).unwrap()
}

/// Gaussian noise around mid-gray, projected onto `mask`.
pub fn band_limited(mask: &SpectralMask, sigma: f64, seed: u64) -> ImageGrid {
    let (h, w) = mask.dims();
    let base = ImageGrid::filled(h, w, 128.0)
        .unwrap()
        .with_gaussian_noise(sigma, seed)
        .unwrap();
    project_to_zone(&base, mask).unwrap()
}

pub fn save(img: &ImageGrid, path: &Path) -> String {
    write_pgm(img, path).unwrap();
    path.to_str().unwrap().to_string()
}
