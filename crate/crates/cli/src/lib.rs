//! Command-line front end for the sampler.
//!
//! Subcommands:
//!
//! * `run`: sample a ground-truth image (loaded or generated), compare with
//!   random sampling, and write masks, sampled images, `metrics.csv`,
//!   `timing.csv` and `manifest.json`.
//! * `generate`: write a synthetic dendrite PGM.
//! * `metrics`: score a truth image against a mask, printing
//!   `ratio,psnr_db,ssim`.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, mismatched inputs),
//! 2 invalid arguments.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use uslads::imaging::{
    generate_dendrite, load_image, load_mask, mask_image, sampled_image, save_image,
    DendriteParams, Image, ImagingError, MeasurementSet,
};
use uslads::metrics::{format_value, random_baseline_count, MetricsError, QualityReport};
use uslads::sampler::{run_uslads, SamplerConfig, SamplerError};

pub const METRICS_HEADER: &str = "method,ratio,psnr_db,ssim";
pub const TIMING_HEADER: &str = "ratio,elapsed_seconds";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// `WxH`, e.g. `128x128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad dimension {v:?} in {s:?}"))
        };
        Ok(Size {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "uslads",
    version,
    about = "Unsupervised dynamic sparse sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sampler and the random baseline, writing snapshots and CSVs.
    Run(RunArgs),
    /// Write a synthetic dendrite ground-truth image.
    Generate(GenerateArgs),
    /// Print `ratio,psnr_db,ssim` for a truth image and a mask.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Random,
    None,
}

#[derive(Debug, Args)]
pub struct DendriteArgs {
    /// Primary arms radiating from the centre.
    #[arg(long, default_value_t = 4)]
    pub arms: usize,
    /// Expected secondary arms per pixel of primary arm.
    #[arg(long, default_value_t = 0.1)]
    pub secondary_rate: f64,
    /// Arm thickness in pixels.
    #[arg(long, default_value_t = 2)]
    pub thickness: usize,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "generate"]))]
pub struct RunArgs {
    /// Ground-truth PGM (P2 or P5, maxval <= 255).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate a synthetic dendrite of this size instead of loading one.
    #[arg(long, value_name = "WxH")]
    pub generate: Option<Size>,
    #[command(flatten)]
    pub dendrite: DendriteArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub initial_ratio: f64,
    #[arg(long, default_value_t = 0.40)]
    pub stop_ratio: f64,
    /// Threshold/cluster/measure iterations per region.
    #[arg(long, default_value_t = 10)]
    pub maxiter: usize,
    /// Measurements per cluster per iteration.
    #[arg(long, default_value_t = 10)]
    pub epsilon: usize,
    /// Largest component count tried by BIC.
    #[arg(long, default_value_t = 10)]
    pub max_clusters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub snapshot_every: f64,
    #[arg(long, default_value = "uslads-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Baseline::Random)]
    pub baseline: Baseline,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_name = "WxH", default_value = "128x128")]
    pub size: Size,
    #[command(flatten)]
    pub dendrite: DendriteArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long = "output")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub truth: PathBuf,
    /// Mask PGM with values in {0, 255}.
    #[arg(long)]
    pub mask: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Input(PathBuf),
    Generated(DendriteParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFiles {
    pub method: String,
    pub ratio: f64,
    pub mask: PathBuf,
    pub image: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SamplerConfig,
    pub baseline: Baseline,
    pub source: Source,
    pub out_dir: PathBuf,
    pub truth: PathBuf,
    pub snapshots: Vec<SnapshotFiles>,
    pub metrics_csv: PathBuf,
    pub timing_csv: PathBuf,
    /// Wall-clock seconds for the whole command.
    pub total_wall_time: f64,
}

impl RunManifest {
    /// Every file the manifest lists.
    pub fn files(&self) -> Vec<&Path> {
        let mut files = vec![
            self.truth.as_path(),
            self.metrics_csv.as_path(),
            self.timing_csv.as_path(),
        ];
        for s in &self.snapshots {
            files.push(&s.mask);
            files.push(&s.image);
        }
        files
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn dendrite_params(size: Size, args: &DendriteArgs, seed: u64) -> DendriteParams {
    DendriteParams {
        width: size.width,
        height: size.height,
        n_primary_arms: args.arms,
        secondary_arm_rate: args.secondary_rate,
        arm_thickness: args.thickness,
        seed,
    }
}

fn generated(params: &DendriteParams) -> Result<Image> {
    match generate_dendrite(params) {
        Err(ImagingError::InvalidParameters(msg)) => Err(CliError::Usage(msg)),
        other => Ok(other?),
    }
}

/// `{method}_{percent:02}_{kind}.pgm`.
pub fn snapshot_name(method: &str, ratio: f64, kind: &str) -> String {
    format!("{method}_{:02}_{kind}.pgm", (ratio * 100.0).round() as u64)
}

struct Row {
    method: &'static str,
    report: QualityReport,
}

fn write_snapshot(
    out: &Path,
    method: &str,
    ratio: f64,
    truth: &Image,
    ms: &MeasurementSet,
) -> Result<SnapshotFiles> {
    let mask = out.join(snapshot_name(method, ratio, "mask"));
    let image = out.join(snapshot_name(method, ratio, "img"));
    save_image(&mask_image(ms), &mask)?;
    save_image(&sampled_image(truth, ms)?, &image)?;
    Ok(SnapshotFiles {
        method: method.to_string(),
        ratio,
        mask,
        image,
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = SamplerConfig {
        stop_ratio: args.stop_ratio,
        initial_ratio: args.initial_ratio,
        maxiter: args.maxiter,
        epsilon: args.epsilon,
        n_max: args.max_clusters,
        seed: args.seed,
        snapshot_every: args.snapshot_every,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let (truth, source) = match (&args.input, args.generate) {
        (Some(path), None) => (load_image(path)?, Source::Input(path.clone())),
        (None, Some(size)) => {
            let params = dendrite_params(size, &args.dendrite, args.seed);
            (generated(&params)?, Source::Generated(params))
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --input and --generate is required".into(),
            ))
        }
    };
    if truth.width() < 8 || truth.height() < 8 {
        return Err(CliError::Usage(format!(
            "image {}x{} is smaller than the 8x8 SSIM window",
            truth.width(),
            truth.height()
        )));
    }

    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    let truth_path = args.out.join("truth.pgm");
    save_image(&truth, &truth_path)?;

    log::info!("sampling {}x{} image", truth.width(), truth.height());
    let (_, trace) = run_uslads(&truth, &cfg)?;

    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut timing = format!("{TIMING_HEADER}\n");
    for snap in &trace.snapshots {
        let ms = MeasurementSet::from_mask(&snap.mask, &truth)?;
        snapshots.push(write_snapshot(
            &args.out, "uslads", snap.ratio, &truth, &ms,
        )?);
        rows.push(Row {
            method: "uslads",
            report: QualityReport::evaluate(&truth, &ms, snap.elapsed)?,
        });
        timing.push_str(&format!(
            "{},{}\n",
            format_value(snap.ratio),
            format_value(snap.elapsed)
        ));

        if args.baseline == Baseline::Random {
            let (baseline, report) =
                random_baseline_count(&truth, snap.count, cfg.baseline_seed())?;
            snapshots.push(write_snapshot(
                &args.out, "random", snap.ratio, &truth, &baseline,
            )?);
            rows.push(Row {
                method: "random",
                report,
            });
        }
    }

    rows.sort_by(|a, b| {
        a.method
            .cmp(b.method)
            .then(a.report.ratio.total_cmp(&b.report.ratio))
    });
    let mut metrics = format!("{METRICS_HEADER}\n");
    for row in &rows {
        metrics.push_str(&format!(
            "{},{},{},{}\n",
            row.method,
            format_value(row.report.ratio),
            format_value(row.report.psnr_db),
            format_value(row.report.ssim)
        ));
    }
    let metrics_csv = args.out.join("metrics.csv");
    let timing_csv = args.out.join("timing.csv");
    write_file(&metrics_csv, metrics)?;
    write_file(&timing_csv, timing)?;

    let manifest = RunManifest {
        config: cfg,
        baseline: args.baseline,
        source,
        out_dir: args.out.clone(),
        truth: truth_path,
        snapshots,
        metrics_csv,
        timing_csv,
        total_wall_time: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_file(&args.out.join("manifest.json"), json)?;
    Ok(manifest)
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let params = dendrite_params(args.size, &args.dendrite, args.seed);
    let img = generated(&params)?;
    save_image(&img, &args.output)?;
    Ok(())
}

/// Returns the `ratio,psnr_db,ssim` line (without newline).
pub fn cmd_metrics(args: &MetricsArgs) -> Result<String> {
    let truth = load_image(&args.truth)?;
    let (w, h, mask) = load_mask(&args.mask)?;
    if (w, h) != (truth.width(), truth.height()) {
        return Err(CliError::Mismatch(format!(
            "mask is {w}x{h} but truth is {}x{}",
            truth.width(),
            truth.height()
        )));
    }
    let ms = MeasurementSet::from_mask(&mask, &truth)?;
    let report = QualityReport::evaluate(&truth, &ms, 0.0)?;
    Ok(format!(
        "{},{},{}",
        format_value(report.ratio),
        format_value(report.psnr_db),
        format_value(report.ssim)
    ))
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("USLADS_LOG", "error");
    let _ = env_logger::Builder::from_env(env).try_init();
}

/// Parses `args` (including the program name) and executes the command,
/// returning the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|m| {
            log::info!("wrote {} files to {}", m.files().len(), m.out_dir.display());
        }),
        Command::Generate(args) => cmd_generate(args),
        Command::Metrics(args) => cmd_metrics(args).map(|line| println!("{line}")),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            if let CliError::Usage(_) = err {
                eprintln!("run `uslads --help` for usage");
            }
            err.exit_code()
        }
    }
}
