//! Command-line front end: batch evaluation of label maps, fusion of ROI
//! predictions into label maps, and the numerical self-test.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use instfuse_core::inference::{run_inference_fusion, InferenceConfig};
use instfuse_core::io::{
    files_by_stem, pair_dataset, read_label_png, read_predictions_json, write_label_png,
    write_report, DatasetPair, Report, ReportFormat,
};
use instfuse_core::metrics::{aggregate, evaluate_image, ImageMetrics};
use instfuse_core::{selftest, Error};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const SELFTEST_FAILED: u8 = 1;
    /// Unpaired stems, or nothing to process.
    pub const MISSING_INPUT: u8 = 2;
    pub const IO: u8 = 3;
    pub const SCHEMA: u8 = 4;
    /// A metric or fusion computation rejected its input, e.g. maps of
    /// different sizes.
    pub const COMPUTE: u8 = 5;
    pub const USAGE: u8 = 64;
}

#[derive(Debug, Parser)]
#[command(name = "instfuse", version, about = "Nuclei instance segmentation evaluation and mask fusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score predicted label maps against ground truth.
    Evaluate(EvaluateArgs),
    /// Fuse prediction JSON files into label-map PNGs.
    Fuse(FuseArgs),
    /// Run gradient checks, oracle comparisons and fixtures.
    Selftest,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of ground-truth label PNGs.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of predicted label PNGs with the same stems.
    #[arg(long)]
    pub pred: PathBuf,
    /// Report file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Also compute symmetric best Dice.
    #[arg(long)]
    pub with_sbd: bool,
    /// Worker threads.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub jobs: u32,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Directory of prediction JSON files.
    #[arg(long)]
    pub pred: PathBuf,
    /// Output directory for label PNGs; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub bin_thresh: f64,
    /// Canvas width, overriding the one stored in each file.
    #[arg(long, requires = "height")]
    pub width: Option<usize>,
    #[arg(long, requires = "width")]
    pub height: Option<usize>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

/// A failure with its exit code and a message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn from_error(e: Error, context: &str) -> Self {
        let code = match e {
            Error::NotFound { .. } | Error::Io { .. } | Error::Decode { .. } | Error::UnsupportedColor { .. } => exit::IO,
            Error::Report(_) => exit::IO,
            Error::Json { .. } | Error::Record { .. } | Error::LabelOverflow(_) => exit::SCHEMA,
            _ => exit::COMPUTE,
        };
        Self::new(code, format!("{context}: {e}"))
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Evaluate(args) => run_evaluate(args, out),
        Command::Fuse(args) => run_fuse(args, out),
        Command::Selftest => run_selftest(out),
    }
}

fn evaluate_pair(pair: &DatasetPair, with_sbd: bool) -> Result<(ImageMetrics, bool), Failure> {
    let gt = read_label_png(&pair.gt_path).map_err(|e| Failure::from_error(e, &pair.image_id))?;
    let pred = read_label_png(&pair.pred_path).map_err(|e| Failure::from_error(e, &pair.image_id))?;
    let m = evaluate_image(&gt, &pred, with_sbd).map_err(|e| Failure::from_error(e, &pair.image_id))?;
    let skipped = with_sbd && m.sbd.is_none();
    Ok((m, skipped))
}

pub fn run_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let pairing = pair_dataset(&args.gt, &args.pred).map_err(|e| Failure::from_error(e, "pairing"))?;
    if !pairing.gt_only.is_empty() || !pairing.pred_only.is_empty() {
        let mut msg = String::from("unpaired image stems");
        if !pairing.gt_only.is_empty() {
            msg += &format!("; ground truth only: {}", pairing.gt_only.join(", "));
        }
        if !pairing.pred_only.is_empty() {
            msg += &format!("; prediction only: {}", pairing.pred_only.join(", "));
        }
        return Err(Failure::new(exit::MISSING_INPUT, msg));
    }
    if pairing.pairs.is_empty() {
        return Err(Failure::new(exit::MISSING_INPUT, "no image pairs found"));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs as usize)
        .build()
        .map_err(|e| Failure::new(exit::IO, format!("thread pool: {e}")))?;
    // collect keeps the input order, which is already sorted by image id
    let results: Vec<Result<(ImageMetrics, bool), Failure>> =
        pool.install(|| pairing.pairs.par_iter().map(|p| evaluate_pair(p, args.with_sbd)).collect());

    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for (pair, r) in pairing.pairs.iter().zip(results) {
        let (m, s) = r?;
        skipped += s as usize;
        rows.push((pair.image_id.clone(), m));
    }
    let values: Vec<ImageMetrics> = rows.iter().map(|r| r.1).collect();
    let report = Report {
        aggregate: aggregate(&values).map_err(|e| Failure::from_error(e, "aggregate"))?,
        rows,
        sbd_skipped: args.with_sbd.then_some(skipped),
    };
    write_report(&report, &args.out, args.format).map_err(|e| Failure::from_error(e, "report"))?;
    let _ = writeln!(out, "evaluated {} image(s), report written to {}", values.len(), args.out.display());
    Ok(())
}

fn fuse_file(path: &Path, out_path: &Path, args: &FuseArgs, cfg: &InferenceConfig) -> Result<(), Failure> {
    let ctx = path.display().to_string();
    let file = read_predictions_json(path).map_err(|e| Failure::from_error(e, &ctx))?;
    let (w, h) = match (args.width, args.height) {
        (Some(w), Some(h)) => (w, h),
        _ => (file.canvas.width, file.canvas.height),
    };
    let map = run_inference_fusion(&file.instances, w, h, cfg).map_err(|e| match e {
        // a box that no longer fits the overridden canvas is a bad record
        Error::BoxOutOfBounds { .. } => Failure::new(exit::SCHEMA, format!("{ctx}: {e}")),
        e => Failure::from_error(e, &ctx),
    })?;
    write_label_png(&map, out_path).map_err(|e| Failure::from_error(e, &ctx))
}

pub fn run_fuse(args: &FuseArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = InferenceConfig {
        beta: args.beta,
        bin_thresh: args.bin_thresh,
    };
    cfg.validate().map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    if matches!((args.width, args.height), (Some(0), _) | (_, Some(0))) {
        return Err(Failure::new(exit::USAGE, "--width and --height must be >= 1"));
    }
    let inputs = files_by_stem(&args.pred, "json").map_err(|e| Failure::from_error(e, "prediction dir"))?;
    if inputs.is_empty() {
        return Err(Failure::new(exit::MISSING_INPUT, "no prediction files found"));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::new(exit::IO, format!("{}: {e}", args.out.display())))?;
    for (stem, path) in &inputs {
        fuse_file(path, &args.out.join(format!("{stem}.png")), args, &cfg)?;
    }
    let _ = writeln!(out, "fused {} file(s) into {}", inputs.len(), args.out.display());
    Ok(())
}

pub fn run_selftest(out: &mut dyn Write) -> Result<(), Failure> {
    let checks = selftest::run_all();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>10}  result", "check", "measured", "tolerance");
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{:<width$}  {:>12.3e}  {:>10.1e}  {verdict}", c.name, c.measured, c.tolerance);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::new(exit::SELFTEST_FAILED, format!("{failed} check(s) failed")));
    }
    let _ = writeln!(out, "all {} checks passed", checks.len());
    Ok(())
}
