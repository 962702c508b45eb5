//! Sampling grids over a dense `H × W` raster and the sample sets taken on them.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! [`SeedableRng::seed_from_u64`], so a `(H, W, M, seed)` tuple always yields
//! the same positions on every platform.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{out_of_range, Error, Result};
use crate::image::ImageGrid;

pub type Position = (usize, usize);

/// Number of extra jitter draws before falling back to the nearest free node.
pub const JITTER_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    QuasiUniform,
    Jitter,
    Random,
    /// Positions supplied by the caller (e.g. unoccluded pixels).
    External,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::QuasiUniform => "quasi_uniform",
            Self::Jitter => "jitter",
            Self::Random => "random",
            Self::External => "external",
        })
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "quasi_uniform" | "quasi" | "uniform" => Ok(Self::QuasiUniform),
            "jitter" | "jittered" => Ok(Self::Jitter),
            "random" => Ok(Self::Random),
            "external" => Ok(Self::External),
            _ => Err(out_of_range("grid", format!("unknown grid kind `{s}`"))),
        }
    }
}

/// SplitMix64 finalizer applied to `seed + stage·φ`; gives independent
/// per-stage seeds from one user seed.
pub fn sub_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `M = round(multiplier · fraction · N)`, at least one sample.
pub fn samples_for_fraction(fraction: f64, multiplier: f64, n: usize) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(out_of_range("fraction", format!("{fraction} not in (0, 1]")));
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(out_of_range("multiplier", format!("{multiplier} must be > 0")));
    }
    let m = (multiplier * fraction * n as f64).round().max(1.0) as usize;
    if m > n {
        return Err(out_of_range(
            "multiplier",
            format!("{m} samples exceed the {n} grid nodes"),
        ));
    }
    Ok(m)
}

/// The `rows × cols` cell decomposition shared by the quasi-uniform and
/// jittered grids, together with the `M` cells that receive a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub height: usize,
    pub width: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major indices of the occupied cells, spread evenly over all
    /// `rows·cols` cells so unused cells do not cluster at the end.
    pub cells: Vec<usize>,
}

impl CellLayout {
    pub fn new(height: usize, width: usize, m: usize) -> Result<Self> {
        check_count(height, width, m)?;
        let mut rows = ((m as f64 * height as f64 / width as f64).sqrt().round() as usize).clamp(1, height);
        let mut cols = m.div_ceil(rows).min(width);
        while rows * cols < m {
            rows = (rows + 1).min(height);
            cols = m.div_ceil(rows).min(width);
        }
        let total = rows * cols;
        let cells = (0..m).map(|i| i * total / m).collect();
        Ok(Self {
            height,
            width,
            rows,
            cols,
            cells,
        })
    }

    fn cell_height(&self) -> f64 {
        self.height as f64 / self.rows as f64
    }

    fn cell_width(&self) -> f64 {
        self.width as f64 / self.cols as f64
    }

    /// Continuous row/col bounds `[lo, hi)` of a cell in pixel coordinates.
    pub fn cell_bounds(&self, cell: usize) -> ((f64, f64), (f64, f64)) {
        let (i, j) = (cell / self.cols, cell % self.cols);
        let (ch, cw) = (self.cell_height(), self.cell_width());
        (
            (i as f64 * ch - 0.5, (i + 1) as f64 * ch - 0.5),
            (j as f64 * cw - 0.5, (j + 1) as f64 * cw - 0.5),
        )
    }

    pub fn cell_center(&self, cell: usize) -> (f64, f64) {
        let (i, j) = (cell / self.cols, cell % self.cols);
        (
            (i as f64 + 0.5) * self.cell_height() - 0.5,
            (j as f64 + 0.5) * self.cell_width() - 0.5,
        )
    }

    fn to_node(&self, y: f64, x: f64) -> Position {
        (
            y.round().clamp(0.0, (self.height - 1) as f64) as usize,
            x.round().clamp(0.0, (self.width - 1) as f64) as usize,
        )
    }
}

fn check_count(height: usize, width: usize, m: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(out_of_range("dimensions", "must be positive"));
    }
    if m == 0 || m > height * width {
        return Err(out_of_range(
            "samples",
            format!("{m} not in [1, {}]", height * width),
        ));
    }
    Ok(())
}

/// Lattice points of the cell decomposition rounded to the nearest nodes.
/// Duplicates created by rounding are dropped and replaced by seeded draws
/// from the unused nodes.
pub fn gen_quasi_uniform(height: usize, width: usize, m: usize, seed: u64) -> Result<Vec<Position>> {
    let layout = CellLayout::new(height, width, m)?;
    let mut taken = vec![false; height * width];
    let mut out = Vec::with_capacity(m);
    for &cell in &layout.cells {
        let (y, x) = layout.cell_center(cell);
        let p = layout.to_node(y, x);
        let idx = p.0 * width + p.1;
        if !taken[idx] {
            taken[idx] = true;
            out.push(p);
        }
    }
    if out.len() < m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut free: Vec<usize> = (0..height * width).filter(|&i| !taken[i]).collect();
        let need = m - out.len();
        let (picked, _) = free.partial_shuffle(&mut rng, need);
        out.extend(picked.iter().map(|&i| (i / width, i % width)));
    }
    Ok(out)
}

/// Positions of a jittered grid plus how often the nearest-free fallback fired.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterGrid {
    pub positions: Vec<Position>,
    pub fallbacks: usize,
}

/// One sample per occupied cell, uniformly placed within the cell
/// independently in each coordinate and rounded to the nearest node.
pub fn gen_jitter(height: usize, width: usize, m: usize, seed: u64) -> Result<JitterGrid> {
    let layout = CellLayout::new(height, width, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; height * width];
    let mut positions = Vec::with_capacity(m);
    let mut fallbacks = 0;
    for &cell in &layout.cells {
        let ((y0, y1), (x0, x1)) = layout.cell_bounds(cell);
        let mut placed = None;
        for _ in 0..=JITTER_REDRAWS {
            let y = rng.random_range(y0..y1);
            let x = rng.random_range(x0..x1);
            let p = layout.to_node(y, x);
            if !taken[p.0 * width + p.1] {
                placed = Some(p);
                break;
            }
        }
        let p = placed.unwrap_or_else(|| {
            fallbacks += 1;
            let (cy, cx) = layout.cell_center(cell);
            nearest_free(&taken, height, width, cy, cx)
        });
        taken[p.0 * width + p.1] = true;
        positions.push(p);
    }
    Ok(JitterGrid {
        positions,
        fallbacks,
    })
}

/// Closest untaken node to `(y, x)`; ties go to the smaller row, then column.
fn nearest_free(taken: &[bool], height: usize, width: usize, y: f64, x: f64) -> Position {
    let (cy, cx) = (
        y.round().clamp(0.0, (height - 1) as f64) as isize,
        x.round().clamp(0.0, (width - 1) as f64) as isize,
    );
    let mut best: Option<(f64, Position)> = None;
    let max_ring = height.max(width) as isize;
    for d in 0..=max_ring {
        if let Some((dist, _)) = best {
            // every node on ring d is at least d - 1 away from (y, x)
            if (d - 1) as f64 > dist.sqrt() {
                break;
            }
        }
        for r in (cy - d)..=(cy + d) {
            for c in (cx - d)..=(cx + d) {
                if (r - cy).abs() != d && (c - cx).abs() != d {
                    continue;
                }
                if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
                    continue;
                }
                let (ru, cu) = (r as usize, c as usize);
                if taken[ru * width + cu] {
                    continue;
                }
                let dist = (r as f64 - y).powi(2) + (c as f64 - x).powi(2);
                let better = match best {
                    None => true,
                    Some((bd, bp)) => dist < bd || (dist == bd && (ru, cu) < bp),
                };
                if better {
                    best = Some((dist, (ru, cu)));
                }
            }
        }
    }
    best.expect("grid has a free node").1
}

/// `M` distinct nodes drawn uniformly without replacement.
pub fn gen_random(height: usize, width: usize, m: usize, seed: u64) -> Result<Vec<Position>> {
    check_count(height, width, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<usize> = (0..height * width).collect();
    let (picked, _) = nodes.partial_shuffle(&mut rng, m);
    Ok(picked.iter().map(|&i| (i / width, i % width)).collect())
}

pub fn generate(kind: GridKind, height: usize, width: usize, m: usize, seed: u64) -> Result<Vec<Position>> {
    match kind {
        GridKind::QuasiUniform => gen_quasi_uniform(height, width, m, seed),
        GridKind::Jitter => Ok(gen_jitter(height, width, m, seed)?.positions),
        GridKind::Random => gen_random(height, width, m, seed),
        GridKind::External => Err(out_of_range("grid", "external grids are supplied, not generated")),
    }
}

/// Measured values at distinct positions of a dense `height × width` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    height: usize,
    width: usize,
    positions: Vec<Position>,
    values: Vec<f64>,
    grid_kind: GridKind,
    seed: u64,
}

impl SampleSet {
    pub fn new(
        height: usize,
        width: usize,
        positions: Vec<Position>,
        values: Vec<f64>,
        grid_kind: GridKind,
        seed: u64,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(out_of_range("dimensions", "must be positive"));
        }
        if positions.len() != values.len() {
            return Err(out_of_range(
                "values",
                format!("{} values for {} positions", values.len(), positions.len()),
            ));
        }
        let mut seen = vec![false; height * width];
        for &(row, col) in &positions {
            if row >= height || col >= width {
                return Err(Error::PositionOutOfBounds {
                    row,
                    col,
                    height,
                    width,
                });
            }
            let idx = row * width + col;
            if seen[idx] {
                return Err(Error::DuplicatePosition(row, col));
            }
            seen[idx] = true;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(out_of_range("values", "must be finite"));
        }
        Ok(Self {
            height,
            width,
            positions,
            values,
            grid_kind,
            seed,
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

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_kind(&self) -> GridKind {
        self.grid_kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Same positions and metadata with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.positions.clone(),
            values,
            self.grid_kind,
            self.seed,
        )
    }

    /// Sampled image: sample values on a background of `fill`.
    pub fn to_image(&self, fill: f64) -> Result<ImageGrid> {
        let mut data = vec![fill; self.height * self.width];
        for (&(r, c), &v) in self.positions.iter().zip(&self.values) {
            data[r * self.width + c] = v;
        }
        ImageGrid::new(self.height, self.width, data)
    }

    /// `# H W M grid_kind seed`, then `row,col,value` lines.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {} {} {} {} {}\nrow,col,value\n",
            self.height,
            self.width,
            self.len(),
            self.grid_kind,
            self.seed
        );
        for (&(r, c), v) in self.positions.iter().zip(&self.values) {
            out.push_str(&format!("{r},{c},{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let csv_err = |line: usize, message: String| Error::Csv { line, message };
        let mut lines = text.lines().enumerate();
        let (_, meta) = lines.next().ok_or_else(|| csv_err(1, "empty file".into()))?;
        let fields: Vec<&str> = meta
            .strip_prefix('#')
            .ok_or_else(|| csv_err(1, "missing `# H W M grid_kind seed` line".into()))?
            .split_whitespace()
            .collect();
        if fields.len() != 5 {
            return Err(csv_err(1, format!("expected 5 metadata fields, got {}", fields.len())));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|e| csv_err(1, format!("`{s}`: {e}")));
        let (height, width, m) = (num(fields[0])? as usize, num(fields[1])? as usize, num(fields[2])? as usize);
        let grid_kind: GridKind = fields[3].parse()?;
        let seed = num(fields[4])?;
        match lines.next() {
            Some((_, h)) if h.trim() == "row,col,value" => {}
            _ => return Err(csv_err(2, "expected header `row,col,value`".into())),
        }
        let mut positions = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(csv_err(i + 1, format!("expected 3 fields, got {}", parts.len())));
            }
            let r = parts[0].trim().parse().map_err(|e| csv_err(i + 1, format!("row: {e}")))?;
            let c = parts[1].trim().parse().map_err(|e| csv_err(i + 1, format!("col: {e}")))?;
            let v = parts[2].trim().parse().map_err(|e| csv_err(i + 1, format!("value: {e}")))?;
            positions.push((r, c));
            values.push(v);
        }
        if positions.len() != m {
            return Err(csv_err(1, format!("metadata says {m} samples, found {}", positions.len())));
        }
        Self::new(height, width, positions, values, grid_kind, seed)
    }
}

/// Copies the pixel values at `positions`.
pub fn take_samples(img: &ImageGrid, positions: &[Position], grid_kind: GridKind, seed: u64) -> Result<SampleSet> {
    let (h, w) = img.dims();
    let values = positions
        .iter()
        .map(|&(r, c)| {
            if r < h && c < w {
                Ok(img.get(r, c))
            } else {
                Err(Error::PositionOutOfBounds {
                    row: r,
                    col: c,
                    height: h,
                    width: w,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSet::new(h, w, positions.to_vec(), values, grid_kind, seed)
}
