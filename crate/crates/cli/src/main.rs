//! Command-line frontend: `denoise` runs the restoration pipeline on one
//! image, `bench` reproduces the PSNR-improvement evaluation on a dataset
//! directory, and `degrade` exposes the synthetic noise injector standalone.
//!
//! Exit codes: 0 success, 1 I/O or validation failure, 2 region starvation
//! (no candidate patch anywhere). Every failure prints one diagnostic line
//! on stderr so shell pipelines can branch on the class.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depthdenoise::bench::{degrade, run_benchmark, BenchmarkOptions, NoiseKind, NoiseSpec};
use depthdenoise::config::{load_config, GuideMode, PipelineConfig};
use depthdenoise::inpaint::InpaintError;
use depthdenoise::io::{load_gray_image, load_mask, save_gray_image, save_mask};
use depthdenoise::pipeline::{denoise, PipelineError};

#[derive(Parser)]
#[command(name = "depthdenoise", version, about = "Edge-guided depth image restoration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Restore a depth image: cluster, extract edges, label regions,
    /// bilateral-filter, inpaint.
    Denoise(DenoiseArgs),
    /// Degrade ground-truth images and evaluate the pipeline across patch
    /// sizes, reporting PSNR improvements.
    Bench(BenchArgs),
    /// Apply the synthetic degradation (holes and/or Gaussian noise) to an
    /// image without denoising it.
    Degrade(DegradeArgs),
}

#[derive(Args)]
struct ConfigOverrides {
    /// Flat key=value config file (CLI flags below override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Histogram bins for pre-clustering
    #[arg(long)]
    bins: Option<usize>,
    /// Gaussian pre-smoothing sigma for edge extraction
    #[arg(long)]
    canny_sigma: Option<f64>,
    /// Lower hysteresis threshold
    #[arg(long)]
    canny_low: Option<f64>,
    /// Upper hysteresis threshold
    #[arg(long)]
    canny_high: Option<f64>,
    /// Interpret thresholds as fractions of the max gradient magnitude
    #[arg(long)]
    canny_relative: Option<bool>,
    /// Spatial Gaussian width of the bilateral filter (pixels)
    #[arg(long)]
    sigma_s: Option<f64>,
    /// Range Gaussian width (intensity units; default: a tenth of the range)
    #[arg(long)]
    sigma_r: Option<f64>,
    /// Bilateral window half-width (default: 2 * sigma_s)
    #[arg(long)]
    radius: Option<usize>,
    /// Chebyshev distance from an edge within which pixels pass through
    #[arg(long)]
    edge_skip: Option<usize>,
    /// Patch side length (odd, >= 3)
    #[arg(long)]
    patch_size: Option<usize>,
    /// Data-term normalization
    #[arg(long)]
    alpha: Option<f64>,
    /// Additive priority floor keeping flat regions ordered
    #[arg(long)]
    epsilon_d: Option<f64>,
    /// Regions smaller than this merge into their largest neighbor
    #[arg(long)]
    min_region_px: Option<usize>,
    /// Depth value that marks a missing sample
    #[arg(long)]
    sentinel: Option<f64>,
    /// Range/edge source: depth or rgb-gray
    #[arg(long)]
    guide_mode: Option<String>,
    /// Candidate search window radius (0 = exhaustive scan)
    #[arg(long)]
    search_radius: Option<usize>,
}

impl ConfigOverrides {
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut config = load_config(self.config.as_deref()).map_err(io_err)?;
        if let Some(v) = self.bins {
            config.bins = v;
        }
        if let Some(v) = self.canny_sigma {
            config.canny_sigma = v;
        }
        if let Some(v) = self.canny_low {
            config.canny_low = v;
        }
        if let Some(v) = self.canny_high {
            config.canny_high = v;
        }
        if let Some(v) = self.canny_relative {
            config.canny_relative = v;
        }
        if let Some(v) = self.sigma_s {
            config.sigma_s = v;
        }
        if let Some(v) = self.sigma_r {
            config.sigma_r = Some(v);
        }
        if let Some(v) = self.radius {
            config.radius = Some(v);
        }
        if let Some(v) = self.edge_skip {
            config.edge_skip_dist = v;
        }
        if let Some(v) = self.patch_size {
            config.patch_size = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.epsilon_d {
            config.epsilon_d = v;
        }
        if let Some(v) = self.min_region_px {
            config.min_region_px = v;
        }
        if let Some(v) = self.sentinel {
            config.sentinel = v;
        }
        if let Some(v) = &self.guide_mode {
            config.guide_mode = match v.as_str() {
                "depth" => GuideMode::Depth,
                "rgb-gray" => GuideMode::RgbGray,
                other => {
                    return Err(CliError::usage(format!(
                        "--guide-mode must be depth or rgb-gray, got {other:?}"
                    )))
                }
            };
        }
        if let Some(v) = self.search_radius {
            config.search_radius = if v == 0 { None } else { Some(v) };
        }
        config.validate().map_err(io_err)?;
        Ok(config)
    }
}

#[derive(Args)]
struct DenoiseArgs {
    /// Input depth image (PGM P2/P5 or grayscale PNG)
    #[arg(long)]
    input: PathBuf,
    /// Optional guide image for rgb-gray mode
    #[arg(long)]
    guide: Option<PathBuf>,
    /// Extra target-mask file (nonzero = target), OR-ed with sentinel holes
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Output path (default: <input>.denoised.pgm)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the per-iteration audit trail as CSV
    #[arg(long)]
    audit: Option<PathBuf>,
    /// Debug output: the region label map as a graymap scaled to the
    /// image's full range
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Print the resolved config, its hash, and diagnostics counters
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of ground-truth depth images
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated patch sizes; even values are bumped to the next odd
    /// size with a warning
    #[arg(long, value_delimiter = ',', default_value = "5,13,21")]
    patch_sizes: Vec<usize>,
    /// Base RNG seed for the degradation
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Where to write the CSV report
    #[arg(long)]
    report: Option<PathBuf>,
    /// Degradation kind: holes, gaussian, or both
    #[arg(long, default_value = "both")]
    kind: String,
    /// Fraction of pixels covered by hole blobs
    #[arg(long, default_value_t = 0.05)]
    hole_fraction: f64,
    /// Side length of square hole blobs
    #[arg(long, default_value_t = 7)]
    blob_size: usize,
    /// Additive Gaussian noise sigma
    #[arg(long, default_value_t = 2.5)]
    gaussian_sigma: f64,
    /// Skip the denoiser (identity baseline)
    #[arg(long)]
    identity: bool,
    /// Write noisy | denoised | ground-truth triptych images here
    #[arg(long)]
    triptych_dir: Option<PathBuf>,
    /// Print the resolved config and its hash
    #[arg(long)]
    verbose: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct DegradeArgs {
    /// Ground-truth input image
    #[arg(long)]
    input: PathBuf,
    /// Degraded output image
    #[arg(long)]
    output: PathBuf,
    /// Optional hole-mask output (nonzero = hole)
    #[arg(long)]
    mask_out: Option<PathBuf>,
    /// Degradation kind: holes, gaussian, or both
    #[arg(long, default_value = "both")]
    kind: String,
    #[arg(long, default_value_t = 0.05)]
    hole_fraction: f64,
    #[arg(long, default_value_t = 7)]
    blob_size: usize,
    #[arg(long, default_value_t = 2.5)]
    gaussian_sigma: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Failure classes mapped to exit codes.
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: String) -> Self {
        Self { message, code: 1 }
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError {
        message: e.to_string(),
        code: 1,
    }
}

fn pipeline_err(e: PipelineError) -> CliError {
    let code = match &e {
        PipelineError::Inpaint(InpaintError::RegionStarved { .. })
        | PipelineError::Inpaint(InpaintError::NoKnownPixels) => 2,
        _ => 1,
    };
    CliError {
        message: e.to_string(),
        code,
    }
}

fn parse_kind(kind: &str) -> Result<NoiseKind, CliError> {
    match kind {
        "holes" => Ok(NoiseKind::Holes),
        "gaussian" => Ok(NoiseKind::Gaussian),
        "both" => Ok(NoiseKind::Both),
        other => Err(CliError::usage(format!(
            "--kind must be holes, gaussian, or both, got {other:?}"
        ))),
    }
}

/// Table-style patch sizes historically include even values; odd sizes are
/// required for a well-defined center, so even ones are bumped up.
fn normalize_patch_sizes(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&s| {
            if s % 2 == 0 {
                eprintln!("warning: patch size {s} is even; using {}", s + 1);
                s + 1
            } else {
                s
            }
        })
        .collect()
}

fn audit_csv(records: &[depthdenoise::inpaint::InpaintAuditRecord]) -> String {
    let mut s =
        String::from("target_x,target_y,source_x,source_y,priority,distance,region_label,fallback_flag\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{:.6},{},{}",
            r.target_center.x,
            r.target_center.y,
            r.source_center.x,
            r.source_center.y,
            r.priority,
            r.distance,
            r.region_label,
            r.fallback as u8
        );
    }
    s
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<(), CliError> {
    let config = args.overrides.resolve()?;
    if args.verbose {
        print!("{}", config.to_key_values());
        println!("config_hash={:016x}", config.hash());
    }

    let depth = load_gray_image(&args.input).map_err(io_err)?;
    let guide = args
        .guide
        .as_ref()
        .map(load_gray_image)
        .transpose()
        .map_err(io_err)?;
    let extra = args.mask.as_ref().map(load_mask).transpose().map_err(io_err)?;

    let out = denoise(&depth, guide.as_ref(), extra.as_ref(), &config).map_err(pipeline_err)?;

    let output = args.output.clone().unwrap_or_else(|| {
        let mut p = args.input.clone();
        p.set_extension("denoised.pgm");
        p
    });
    save_gray_image(&out.image, &output).map_err(io_err)?;

    if let Some(audit_path) = &args.audit {
        std::fs::write(audit_path, audit_csv(&out.audit)).map_err(io_err)?;
    }
    if let Some(labels_path) = &args.labels_out {
        let view = depthdenoise::regions::labels_to_image(&out.labels, depth.max_value());
        save_gray_image(&view, labels_path).map_err(io_err)?;
    }
    if args.verbose {
        println!(
            "target_pixels={} iterations={} regions={} edge_skipped={} masked_passthrough={} \
             empty_windows={} degenerate_normals={}",
            out.mask.target_count(),
            out.audit.len(),
            out.labels.region_count(),
            out.bilateral_stats.edge_skipped,
            out.bilateral_stats.masked,
            out.bilateral_stats.empty_window,
            out.degenerate_normals,
        );
    }
    println!("wrote {}", output.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let config = args.overrides.resolve()?;
    if args.verbose {
        print!("{}", config.to_key_values());
        println!("config_hash={:016x}", config.hash());
    }
    let options = BenchmarkOptions {
        patch_sizes: normalize_patch_sizes(&args.patch_sizes),
        spec: NoiseSpec {
            kind: parse_kind(&args.kind)?,
            hole_fraction: args.hole_fraction,
            hole_blob_size: args.blob_size,
            gaussian_sigma: args.gaussian_sigma,
            rng_seed: args.seed,
        },
        config,
        identity_baseline: args.identity,
        triptych_dir: args.triptych_dir.clone(),
    };
    let report = run_benchmark(&args.dataset, &options).map_err(io_err)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_csv()).map_err(io_err)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_degrade(args: &DegradeArgs) -> Result<(), CliError> {
    let gt = load_gray_image(&args.input).map_err(io_err)?;
    let spec = NoiseSpec {
        kind: parse_kind(&args.kind)?,
        hole_fraction: args.hole_fraction,
        hole_blob_size: args.blob_size,
        gaussian_sigma: args.gaussian_sigma,
        rng_seed: args.seed,
    };
    let (noisy, mask) = degrade(&gt, &spec).map_err(io_err)?;
    save_gray_image(&noisy, &args.output).map_err(io_err)?;
    if let Some(mask_path) = &args.mask_out {
        save_mask(&mask, mask_path).map_err(io_err)?;
    }
    println!(
        "wrote {} ({} hole pixels)",
        args.output.display(),
        mask.target_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Denoise(args) => cmd_denoise(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Degrade(args) => cmd_degrade(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
