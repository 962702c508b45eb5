use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use nnr_core::inverse::{
    inpaint as inpaint_image, phase_retrieve_masked, spectral_reconstruct, spectral_sample, support_disk,
    FourierModulus, OcclusionMask, PhaseOptions,
};
use nnr_core::metrics::{Db, ErrorStats};
use nnr_core::reconstruct::{gp_reconstruct, GpOptions, ReconstructionTrace};
use nnr_core::sampler::{gen_jitter, generate, samples_for_fraction, sub_seed, take_samples, GridKind, SampleSet};
use nnr_core::transforms::Apodization;
use nnr_core::zones::{
    best_zone_for_rms, build_zone_mask, cs_required_redundancy, fit_shape_to_fraction, fit_zone_to_energy,
    sparse_spectrum, sparse_spectrum_of, SpectralMask, ZoneAnchor, ZoneFamily, ZoneShape,
};
use nnr_core::{dct2, dft2, read_pgm, ImageGrid};

use crate::output::Outputs;
use crate::{
    Anchor, AnalyzeArgs, CsboundArgs, FitzoneArgs, InpaintArgs, IterArgs, PhaserecArgs, PipelineArgs,
    ReconstructArgs, SampleArgs, ShapeArgs, SpecreconArgs,
};

/// Sub-seed streams derived from the single `--seed`.
const NOISE_STREAM: u64 = 1;
const GRID_STREAM: u64 = 2;

/// Aspect ratios tried by `--shape auto`.
const AUTO_ASPECTS: [f64; 9] = [0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0];

/// Gray levels per unit of absolute error in error maps.
const ERROR_MAP_GAIN: f64 = 10.0;

fn load(path: &Path) -> Result<ImageGrid> {
    read_pgm(path).with_context(|| format!("reading {}", path.display()))
}

fn template(args: &ShapeArgs, family: ZoneFamily) -> ZoneShape {
    let anchor = match args.anchor {
        Anchor::Corner => ZoneAnchor::DcCorner,
        Anchor::Centered => ZoneAnchor::Centered,
    };
    let mut t = ZoneShape::new(family, anchor)
        .with_aspect_ratio(args.aspect)
        .with_exponent(args.exponent)
        .with_orientation(args.orientation);
    if let Some(span) = args.span {
        t = t.with_span(span);
    }
    t
}

fn family(args: &ShapeArgs) -> Result<ZoneFamily> {
    args.shape
        .parse()
        .map_err(|e| anyhow!("{e} (`auto` is only valid when fitting to an RMS target)"))
}

fn candidates(args: &ShapeArgs) -> Result<Vec<ZoneShape>> {
    if args.shape != "auto" {
        return Ok(vec![template(args, family(args)?)]);
    }
    let mut out = Vec::new();
    for fam in ZoneFamily::ALL {
        if fam == ZoneFamily::PieSector {
            // a pie's extent does not depend on the aspect ratio
            out.push(template(args, fam).with_aspect_ratio(1.0));
            continue;
        }
        for rho in AUTO_ASPECTS {
            out.push(template(args, fam).with_aspect_ratio(rho));
        }
    }
    Ok(out)
}

fn zone_from_fraction(args: &ShapeArgs, h: usize, w: usize) -> Result<(ZoneShape, SpectralMask)> {
    let fraction = args.fraction.ok_or_else(|| anyhow!("a zone needs --fraction (or --mask)"))?;
    let shape = fit_shape_to_fraction(&template(args, family(args)?), fraction, h, w)?;
    let mask = build_zone_mask(&shape, h, w)?;
    Ok((shape, mask))
}

fn zone_mask(mask: Option<&Path>, shape: &ShapeArgs, h: usize, w: usize) -> Result<SpectralMask> {
    let mask = match mask {
        Some(p) => SpectralMask::from_image(&load(p)?),
        None => zone_from_fraction(shape, h, w)?.1,
    };
    ensure!(
        mask.dims() == (h, w),
        "mask is {}x{}, image is {h}x{w}",
        mask.height(),
        mask.width()
    );
    Ok(mask)
}

fn gp_options(args: &IterArgs) -> GpOptions {
    GpOptions {
        max_iters: args.iters,
        stop_delta: args.stop_delta,
        keep_fraction: args.keep_fraction,
        final_projection: args.final_projection,
    }
}

fn error_map(recon: &ImageGrid, truth: &ImageGrid) -> Result<ImageGrid> {
    let data = recon
        .data()
        .iter()
        .zip(truth.data())
        .map(|(a, b)| ((a - b).abs() * ERROR_MAP_GAIN).min(255.0))
        .collect();
    Ok(ImageGrid::new(recon.height(), recon.width(), data)?)
}

fn report_trace(trace: &ReconstructionTrace) {
    if let Some(last) = trace.last() {
        println!("iterations {} final_delta {:.6}", last.iter, last.delta_rms);
    }
}

fn report_error(label: &str, recon: &ImageGrid, truth: &ImageGrid) -> Result<ErrorStats> {
    let stats = ErrorStats::compute(recon, truth)?;
    println!(
        "{label}rms {:.4} psnr {} dB rms_trim90 {:.4}",
        stats.rms,
        Db(stats.psnr_db),
        stats.trimmed_rms_90
    );
    Ok(stats)
}

pub fn analyze(args: &AnalyzeArgs, out: &mut Outputs) -> Result<()> {
    ensure!(
        args.rms_target.is_some() || args.energy.is_some(),
        "give --rms-target and/or --energy"
    );
    let img = load(&args.input)?;
    let n = img.len();
    if let Some(target) = args.rms_target {
        let rep = sparse_spectrum(&img, target)?;
        println!("coefficients {} of {n}", rep.k);
        println!("sparsity {:.6}", rep.sparsity);
        println!("achieved_rms {:.6}", rep.achieved_rms);
        if let Some(p) = &args.sparse_map {
            out.pgm(p, &rep.kept_mask().to_image())?;
        }
        if let Some(p) = &args.sparse_csv {
            out.text(p, &rep.to_csv())?;
        }
    } else {
        ensure!(
            args.sparse_map.is_none() && args.sparse_csv.is_none(),
            "sparse outputs need --rms-target"
        );
    }
    if let Some(fraction) = args.energy {
        let src = if args.no_apodize {
            img.clone()
        } else {
            Apodization::default().apply(&img)
        };
        let spectrum = dft2(&src);
        let t = ZoneShape::new(ZoneFamily::Ellipse, ZoneAnchor::Centered).with_aspect_ratio(args.aspect);
        let (shape, mask) = fit_zone_to_energy(&t, &spectrum, fraction).context("fitting energy zone")?;
        println!("energy_zone_cells {}", mask.count());
        println!("energy_zone_fraction {:.6}", mask.fraction());
        println!("energy_zone {shape}");
        if let Some(p) = &args.zone_mask {
            out.pgm(p, &mask.to_image())?;
        }
    }
    Ok(())
}

pub fn fitzone(args: &FitzoneArgs, out: &mut Outputs) -> Result<()> {
    let img = args.input.as_deref().map(load).transpose()?;
    let (h, w) = match (&img, args.height, args.width) {
        (Some(i), _, _) => i.dims(),
        (None, Some(h), Some(w)) => (h, w),
        _ => bail!("give --input or both --height and --width"),
    };
    let (shape, mask) = if let Some(target) = args.rms_target {
        ensure!(args.shape.fraction.is_none(), "--fraction and --rms-target are exclusive");
        let img = img.ok_or_else(|| anyhow!("--rms-target needs --input"))?;
        let spectrum = dct2(&img);
        let fit = best_zone_for_rms(&candidates(&args.shape)?, &spectrum, target)?;
        let rep = sparse_spectrum_of(&spectrum, target)?;
        println!("sparsity {:.6}", rep.sparsity);
        println!("zone_redundancy {:.4}", fit.1.fraction() / rep.sparsity);
        fit
    } else {
        zone_from_fraction(&args.shape, h, w)?
    };
    println!("zone {shape}");
    println!("cells {} fraction {:.6}", mask.count(), mask.fraction());
    out.pgm(&args.output, &mask.to_image())
}

pub fn sample(args: &SampleArgs, out: &mut Outputs) -> Result<()> {
    let clean = load(&args.input)?;
    let img = match args.add_noise {
        Some(sigma) => clean.with_gaussian_noise(sigma, sub_seed(args.seed, NOISE_STREAM))?,
        None => clean,
    };
    let (h, w) = img.dims();
    let m = match (args.count, args.fraction) {
        (Some(m), None) => m,
        (None, Some(f)) => samples_for_fraction(f, args.multiplier, h * w)?,
        _ => bail!("give exactly one of --count and --fraction"),
    };
    let kind: GridKind = args.grid.parse()?;
    let grid_seed = sub_seed(args.seed, GRID_STREAM);
    let positions = if kind == GridKind::Jitter {
        let grid = gen_jitter(h, w, m, grid_seed)?;
        println!("fallbacks {}", grid.fallbacks);
        grid.positions
    } else {
        generate(kind, h, w, m, grid_seed)?
    };
    let samples = take_samples(&img, &positions, kind, args.seed)?;
    println!("samples {m} of {}", h * w);
    out.text(&args.output, &samples.to_csv())
}

pub fn reconstruct(args: &ReconstructArgs, out: &mut Outputs) -> Result<()> {
    let text = std::fs::read_to_string(&args.samples).with_context(|| format!("reading {}", args.samples.display()))?;
    let samples = SampleSet::from_csv(&text)?;
    let (h, w) = samples.dims();
    let mask = zone_mask(args.mask.as_deref(), &args.shape, h, w)?;
    let truth = args.truth.as_deref().map(load).transpose()?;
    let rec = gp_reconstruct(&samples, &mask, &gp_options(&args.iter), truth.as_ref())?;
    report_trace(&rec.trace);
    if let Some(t) = &truth {
        report_error("", &rec.image, t)?;
    }
    out.pgm(&args.output, &rec.image)?;
    if let Some(p) = &args.trace {
        out.text(p, &rec.trace.to_csv())?;
    }
    Ok(())
}

const SUMMARY_HEADER: &str = "image,height,width,zone,fraction,sparsity,zone_redundancy,sampling_redundancy,overall_redundancy,samples,grid,seed,noise_sigma,iterations,rms,psnr_db,rms_trim90";

pub fn pipeline(args: &PipelineArgs, out: &mut Outputs) -> Result<()> {
    let img = load(&args.input)?;
    let (h, w) = img.dims();
    let n = h * w;
    let spectrum = dct2(&img);
    let (shape, mask) = match (args.shape.fraction, args.rms_target) {
        (Some(_), _) => zone_from_fraction(&args.shape, h, w).context("fitting zone")?,
        (None, Some(t)) => best_zone_for_rms(&candidates(&args.shape)?, &spectrum, t).context("fitting zone")?,
        (None, None) => bail!("give --fraction or --rms-target"),
    };
    let fr = mask.fraction();
    let sparsity = args
        .rms_target
        .map(|t| sparse_spectrum_of(&spectrum, t).map(|r| r.sparsity))
        .transpose()
        .context("sparse spectrum")?;

    let observed = match args.add_noise {
        Some(sigma) => img.with_gaussian_noise(sigma, sub_seed(args.seed, NOISE_STREAM))?,
        None => img.clone(),
    };
    let kind: GridKind = args.grid.parse()?;
    let m = samples_for_fraction(fr, args.multiplier, n).context("sample count")?;
    let positions = generate(kind, h, w, m, sub_seed(args.seed, GRID_STREAM)).context("sampling grid")?;
    let samples = take_samples(&observed, &positions, kind, args.seed)?;
    let rec = gp_reconstruct(&samples, &mask, &gp_options(&args.iter), Some(&img)).context("reconstruction")?;
    let stats = ErrorStats::compute(&rec.image, &img)?;

    let zone_red = sparsity.map(|s| fr / s);
    let overall = zone_red.map(|z| args.multiplier * z);
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let iterations = rec.trace.len();
    println!(
        "zone {shape} | fraction {fr:.4} | sparsity {} | zone redundancy {} | sampling redundancy {:.4} | overall redundancy {} | samples {m} | iterations {iterations} | rms {:.4} | psnr {} dB",
        opt(sparsity),
        opt(zone_red),
        args.multiplier,
        opt(overall),
        stats.rms,
        Db(stats.psnr_db),
    );
    let mut row = String::new();
    write!(
        row,
        "{},{h},{w},{},{fr:.6},{},{},{:.6},{},{m},{kind},{},{},{iterations},{:.6},{:.4},{:.6}",
        args.input.file_name().map(|f| f.to_string_lossy()).unwrap_or_default(),
        shape.to_string().replace(',', ";"),
        opt(sparsity),
        opt(zone_red),
        args.multiplier,
        opt(overall),
        args.seed,
        args.add_noise.map(|s| s.to_string()).unwrap_or_default(),
        stats.rms,
        stats.psnr_db,
        stats.trimmed_rms_90,
    )?;
    println!("{SUMMARY_HEADER}");
    println!("{row}");

    if let Some(dir) = &args.out_dir {
        out.text(&dir.join("samples.csv"), &samples.to_csv())?;
        out.pgm(&dir.join("mask.pgm"), &mask.to_image())?;
        out.pgm(&dir.join("recon.pgm"), &rec.image)?;
        out.pgm(&dir.join("error.pgm"), &error_map(&rec.image, &img)?)?;
        if args.trace.is_none() {
            out.text(&dir.join("trace.csv"), &rec.trace.to_csv())?;
        }
    }
    if let Some(p) = &args.trace {
        out.text(p, &rec.trace.to_csv())?;
    }
    if let Some(p) = &args.summary {
        out.text(p, &format!("{SUMMARY_HEADER}\n{row}\n"))?;
    }
    Ok(())
}

pub fn inpaint(args: &InpaintArgs, out: &mut Outputs) -> Result<()> {
    let img = load(&args.input)?;
    let occl = OcclusionMask::from_image(&load(&args.occlusion)?);
    ensure!(occl.dims() == img.dims(), "occlusion mask and image sizes differ");
    let (h, w) = img.dims();
    let zone = zone_mask(args.mask.as_deref(), &args.shape, h, w)?;
    let truth = args.truth.as_deref().map(load).transpose()?;
    println!("observed {:.4}", occl.observed_fraction());
    let rec = inpaint_image(&img, &occl, &zone, &gp_options(&args.iter), truth.as_ref())?;
    report_trace(&rec.trace);
    if let Some(t) = &truth {
        report_error("", &rec.image, t)?;
    }
    out.pgm(&args.output, &rec.image)?;
    if let Some(p) = &args.trace {
        out.text(p, &rec.trace.to_csv())?;
    }
    Ok(())
}

pub fn specrecon(args: &SpecreconArgs, out: &mut Outputs) -> Result<()> {
    let img = load(&args.input)?;
    let (h, w) = img.dims();
    let ss = spectral_sample(&img, args.support, args.bound, args.seed)?;
    let rate = nnr_core::inverse::spectral_sampling_rate(h, w, args.support, args.bound)?;
    println!("sampling_rate {rate:.4}");
    println!("samples {} of {}", ss.len(), h * w);
    let truth = support_disk(h, w, args.support)?.apply(&img)?;
    let opts = GpOptions {
        max_iters: args.iters,
        stop_delta: args.stop_delta,
        ..GpOptions::default()
    };
    let rec = spectral_reconstruct(&ss, &opts, Some(&truth))?;
    report_trace(&rec.trace);
    report_error("", &rec.image, &truth)?;
    println!("max_imag {:.3e}", rec.max_imag);
    if let Some(p) = &args.samples_out {
        out.text(p, &ss.to_csv())?;
    }
    out.pgm(&args.output, &rec.image)?;
    if let Some(p) = &args.trace {
        out.text(p, &rec.trace.to_csv())?;
    }
    Ok(())
}

pub fn phaserec(args: &PhaserecArgs, out: &mut Outputs) -> Result<()> {
    let img = load(&args.input)?;
    let (h, w) = img.dims();
    let occl = match &args.occlusion {
        Some(p) => OcclusionMask::from_image(&load(p)?),
        None => OcclusionMask::random_squares(h, w, args.square_size, args.squares, args.seed)?,
    };
    ensure!(occl.dims() == (h, w), "occlusion mask and image sizes differ");
    let observed = occl.apply(&img)?;
    let modulus = FourierModulus::of_image(&observed)?;
    let popts = PhaseOptions {
        max_iters: args.iters1,
        nonnegative: args.nonnegative,
        initial_phase: None,
    };
    let stage1 = phase_retrieve_masked(&modulus, &occl, &popts).context("phase retrieval")?;
    if let (Some(first), Some(last)) = (stage1.residuals.first(), stage1.residuals.last()) {
        println!("modulus_residual first {first:.6e} last {last:.6e}");
    }
    report_error("stage1 ", &stage1.image, &observed)?;
    if let Some(p) = &args.residuals {
        let mut csv = String::from("iter,residual\n");
        for (i, r) in stage1.residuals.iter().enumerate() {
            writeln!(csv, "{},{r}", i + 1)?;
        }
        out.text(p, &csv)?;
    }
    if let Some(p) = &args.stage1_output {
        out.pgm(p, &stage1.image)?;
    }
    if args.stage1_only {
        return out.pgm(&args.output, &stage1.image);
    }
    let zone = zone_mask(args.mask.as_deref(), &args.shape, h, w)?;
    let rec = inpaint_image(&stage1.image, &occl, &zone, &gp_options(&args.iter), Some(&img)).context("in-painting")?;
    report_trace(&rec.trace);
    report_error("final ", &rec.image, &img)?;
    out.pgm(&args.output, &rec.image)?;
    if let Some(p) = &args.trace {
        out.text(p, &rec.trace.to_csv())?;
    }
    Ok(())
}

pub fn csbound(args: &CsboundArgs, out: &mut Outputs) -> Result<()> {
    match (args.sparsity, args.sweep_from, args.sweep_to) {
        (Some(s), None, None) => {
            let b = cs_required_redundancy(s)?;
            let note = if b.clamped { " (clamped to 1)" } else { "" };
            println!("sparsity {s} redundancy {:.4}{note}", b.redundancy);
            Ok(())
        }
        (None, Some(from), Some(to)) => {
            ensure!(args.steps >= 2, "--steps must be at least 2");
            ensure!(from > 0.0 && to > 0.0, "sweep bounds must be positive");
            let mut csv = String::from("sparsity,redundancy\n");
            let (la, lb) = (from.ln(), to.ln());
            for i in 0..args.steps {
                let s = if i == 0 {
                    from
                } else if i + 1 == args.steps {
                    to
                } else {
                    (la + (lb - la) * i as f64 / (args.steps - 1) as f64).exp()
                };
                let b = cs_required_redundancy(s)?;
                writeln!(csv, "{s},{:.6}", b.redundancy)?;
            }
            match &args.output {
                Some(p) => out.text(p, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        _ => bail!("give --sparsity or both --sweep-from and --sweep-to"),
    }
}
