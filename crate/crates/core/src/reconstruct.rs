//! Inverse-distance initial interpolation and the iterative bounded-spectrum
//! (Gerchberg–Papoulis) reconstruction.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::metrics::{rms_error, trimmed_rms, DEFAULT_KEEP_FRACTION};
use crate::sampler::{Position, SampleSet};
use crate::transforms::Dct2Plan;
use crate::zones::SpectralMask;

/// Number of neighbours used by [`init_interpolate`].
pub const INTERP_NEIGHBOURS: usize = 3;

/// Below this many samples the neighbour search is a linear scan.
pub const BRUTE_FORCE_LIMIT: usize = 4096;

/// A candidate neighbour: squared distance, then sample position for ties.
type Candidate = (u64, Position, f64);

fn better(a: &Candidate, b: &Candidate) -> bool {
    (a.0, a.1) < (b.0, b.1)
}

/// Keeps the `k` best candidates sorted ascending.
fn offer(best: &mut Vec<Candidate>, k: usize, cand: Candidate) {
    if best.len() == k && !better(&cand, &best[k - 1]) {
        return;
    }
    let at = best.iter().position(|b| better(&cand, b)).unwrap_or(best.len());
    best.insert(at, cand);
    best.truncate(k);
}

fn dist2(a: Position, b: Position) -> u64 {
    let dr = a.0.abs_diff(b.0) as u64;
    let dc = a.1.abs_diff(b.1) as u64;
    dr * dr + dc * dc
}

fn weighted(best: &[Candidate]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(d2, _, v) in best {
        let w = 1.0 / (d2 as f64).sqrt();
        num += w * v;
        den += w;
    }
    num / den
}

/// Fills unsampled nodes with the inverse-distance weighted mean of their
/// `min(3, M)` nearest samples. Sampled nodes keep their values exactly.
pub fn init_interpolate(samples: &SampleSet) -> Result<ImageGrid> {
    if samples.len() >= BRUTE_FORCE_LIMIT {
        interpolate_binned(samples)
    } else {
        interpolate_brute(samples)
    }
}

fn prepare(samples: &SampleSet) -> Result<(Vec<f64>, Vec<bool>)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (h, w) = samples.dims();
    let mut data = vec![0.0; h * w];
    let mut known = vec![false; h * w];
    for (&(r, c), &v) in samples.positions().iter().zip(samples.values()) {
        data[r * w + c] = v;
        known[r * w + c] = true;
    }
    Ok((data, known))
}

pub(crate) fn interpolate_brute(samples: &SampleSet) -> Result<ImageGrid> {
    let (mut data, known) = prepare(samples)?;
    let (h, w) = samples.dims();
    let k = INTERP_NEIGHBOURS.min(samples.len());
    let mut best: Vec<Candidate> = Vec::with_capacity(k + 1);
    for idx in (0..h * w).filter(|&i| !known[i]) {
        let node = (idx / w, idx % w);
        best.clear();
        for (&p, &v) in samples.positions().iter().zip(samples.values()) {
            offer(&mut best, k, (dist2(node, p), p, v));
        }
        data[idx] = weighted(&best);
    }
    ImageGrid::new(h, w, data)
}

pub(crate) fn interpolate_binned(samples: &SampleSet) -> Result<ImageGrid> {
    let (mut data, known) = prepare(samples)?;
    let (h, w) = samples.dims();
    let m = samples.len();
    let k = INTERP_NEIGHBOURS.min(m);
    // about two samples per bucket
    let side = ((2.0 * (h * w) as f64 / m as f64).sqrt().ceil() as usize).max(1);
    let (bh, bw) = (h.div_ceil(side), w.div_ceil(side));
    let mut buckets: Vec<Vec<(Position, f64)>> = vec![Vec::new(); bh * bw];
    for (&p, &v) in samples.positions().iter().zip(samples.values()) {
        buckets[(p.0 / side) * bw + p.1 / side].push((p, v));
    }
    let mut best: Vec<Candidate> = Vec::with_capacity(k + 1);
    for idx in (0..h * w).filter(|&i| !known[i]) {
        let node = (idx / w, idx % w);
        let (br, bc) = ((node.0 / side) as isize, (node.1 / side) as isize);
        best.clear();
        for ring in 0..=bh.max(bw) as isize {
            if ring > 0 && best.len() == k {
                // samples in this ring are at least (ring-1)*side + 1 away on one axis
                let reach = ((ring - 1) as u64) * side as u64 + 1;
                if reach * reach > best[k - 1].0 {
                    break;
                }
            }
            for r in (br - ring)..=(br + ring) {
                if r < 0 || r >= bh as isize {
                    continue;
                }
                for c in (bc - ring)..=(bc + ring) {
                    if c < 0 || c >= bw as isize {
                        continue;
                    }
                    if (r - br).abs() != ring && (c - bc).abs() != ring {
                        continue;
                    }
                    for &(p, v) in &buckets[r as usize * bw + c as usize] {
                        offer(&mut best, k, (dist2(node, p), p, v));
                    }
                }
            }
        }
        data[idx] = weighted(&best);
    }
    ImageGrid::new(h, w, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpOptions {
    pub max_iters: usize,
    /// Stop once the RMS change between successive iterates drops below this.
    pub stop_delta: f64,
    pub keep_fraction: f64,
    /// Project the final iterate onto the zone once more, giving a strictly
    /// bounded-spectrum output that no longer matches the samples exactly.
    pub final_projection: bool,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            stop_delta: 1e-4,
            keep_fraction: DEFAULT_KEEP_FRACTION,
            final_projection: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub rms_total: Option<f64>,
    pub rms_trim: Option<f64>,
    pub delta_rms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReconstructionTrace {
    pub records: Vec<TraceRecord>,
}

impl ReconstructionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn rms_totals(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.rms_total).collect()
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("iter,rms_total,rms_trim90,delta_rms\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.iter, opt(r.rms_total), opt(r.rms_trim), r.delta_rms);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: ImageGrid,
    pub trace: ReconstructionTrace,
}

/// Alternates between the spectral zone (DCT masking) and the measured
/// samples, starting from [`init_interpolate`].
pub fn gp_reconstruct(
    samples: &SampleSet,
    mask: &SpectralMask,
    opts: &GpOptions,
    truth: Option<&ImageGrid>,
) -> Result<Reconstruction> {
    let (h, w) = samples.dims();
    if mask.dims() != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            found: mask.dims(),
        });
    }
    if let Some(t) = truth {
        if t.dims() != (h, w) {
            return Err(Error::DimensionMismatch {
                expected: (h, w),
                found: t.dims(),
            });
        }
    }
    if opts.max_iters == 0 {
        return Err(crate::error::out_of_range("max_iters", "must be at least 1"));
    }
    let plan = Dct2Plan::new(h, w);
    let mut x = init_interpolate(samples)?.into_data();
    let mut y = vec![0.0; h * w];
    let mut trace = ReconstructionTrace::default();
    let n = (h * w) as f64;
    for iter in 1..=opts.max_iters {
        y.copy_from_slice(&x);
        plan.forward(&mut y);
        mask.apply(&mut y);
        plan.inverse(&mut y);
        for (&(r, c), &v) in samples.positions().iter().zip(samples.values()) {
            y[r * w + c] = v;
        }
        let delta = (x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
        std::mem::swap(&mut x, &mut y);
        let (rms_total, rms_trim) = match truth {
            Some(t) => {
                let cur = ImageGrid::from_raw(h, w, x.clone());
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
    if opts.final_projection {
        plan.forward(&mut x);
        mask.apply(&mut x);
        plan.inverse(&mut x);
    }
    Ok(Reconstruction {
        image: ImageGrid::new(h, w, x)?,
        trace,
    })
}

/// `idct2(mask ∘ dct2(img))`: the orthogonal projection onto the zone.
pub fn project_to_zone(img: &ImageGrid, mask: &SpectralMask) -> Result<ImageGrid> {
    if mask.dims() != img.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            found: mask.dims(),
        });
    }
    let (h, w) = img.dims();
    let plan = Dct2Plan::new(h, w);
    let mut data = img.data().to_vec();
    plan.forward(&mut data);
    mask.apply(&mut data);
    plan.inverse(&mut data);
    Ok(ImageGrid::from_raw(h, w, data))
}
