//! Command-line driver for `densityseg`.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 data.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use densityseg::{
    clahe::clahe_masked, make_bank, metrics, rescale_to_depth, write_pgm, DensityReport,
};

pub mod config;
pub mod pipeline;

pub use config::PipelineConfig;
pub use pipeline::{process, run_batch, run_single, BatchOutcome, SingleOutcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Data {
        context: String,
        source: densityseg::Error,
    },
    #[error("no pairs found between {} and {}", left.display(), right.display())]
    NoPairs { left: PathBuf, right: PathBuf },
}

impl CliError {
    pub fn data(context: impl Display, source: densityseg::Error) -> Self {
        CliError::Data {
            context: context.to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Data { .. } | CliError::NoPairs { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "densityseg",
    version,
    about = "Dense-tissue segmentation for mammograms"
)]
pub struct Cli {
    #[command(flatten)]
    pub opts: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Gabor filter bank as PGM images.
    Kernels {
        /// Size the kernels for this image instead of `--kernel-size`.
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// CLAHE only.
    Enhance {
        image: PathBuf,
        mask: Option<PathBuf>,
    },
    /// Segment one image/mask pair.
    Segment {
        image: PathBuf,
        mask: PathBuf,
        /// Report id; defaults to the image file stem.
        #[arg(long)]
        id: Option<String>,
    },
    /// Segment every pair of two directories matched by file stem.
    Batch { images: PathBuf, masks: PathBuf },
    /// Recompute the CSV report from breast masks and dense masks.
    Report { masks: PathBuf, dense: PathBuf },
}

/// Flags layered over the config file.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also write every intermediate stage.
    #[arg(long, global = true)]
    pub debug_stages: bool,
    #[arg(long, global = true, value_name = "N")]
    pub orientations: Option<usize>,
    #[arg(long, global = true, value_name = "N")]
    pub kernel_size: Option<usize>,
    #[arg(long, global = true, value_name = "F")]
    pub clip_limit: Option<f64>,
    /// CLAHE grid, tiles across x tiles down.
    #[arg(long, global = true, value_name = "NxM", value_parser = config::parse_tiles)]
    pub tiles: Option<(usize, usize)>,
    #[arg(long, global = true, value_name = "F")]
    pub t_low: Option<f64>,
    #[arg(long, global = true, value_name = "F")]
    pub t_high: Option<f64>,
    #[arg(long, global = true, value_name = "max|mean", value_parser = config::parse_reference)]
    pub reference: Option<densityseg::Reference>,
    #[arg(long, global = true, value_name = "F")]
    pub gain: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    pub morph_radius: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

impl Overrides {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            cfg.merge_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        cfg.debug_stages |= self.debug_stages;
        if let Some(v) = self.orientations {
            cfg.orientations = v;
        }
        if let Some(v) = self.kernel_size {
            cfg.kernel_size = Some(v);
        }
        if let Some(v) = self.clip_limit {
            cfg.clahe.clip_limit = v;
        }
        if let Some((x, y)) = self.tiles {
            cfg.clahe.tiles_x = x;
            cfg.clahe.tiles_y = y;
        }
        if let Some(v) = self.t_low {
            cfg.segment.t_low = v;
        }
        if let Some(v) = self.t_high {
            cfg.segment.t_high = v;
        }
        if let Some(v) = self.reference {
            cfg.segment.reference = v;
        }
        if let Some(v) = self.gain {
            cfg.segment.gain = v;
        }
        if let Some(v) = self.morph_radius {
            cfg.segment.morph_radius = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command. Returns warnings to print.
pub fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = cli.opts.resolve()?;
    densityseg::par::with_threads(cfg.jobs, || dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &PipelineConfig) -> Result<Vec<String>, CliError> {
    let out = cfg.out.as_path();
    pipeline::create_dir(out)?;
    match command {
        Command::Kernels { image } => {
            let size = match (cfg.kernel_size, image) {
                (Some(k), _) => k,
                (None, Some(path)) => {
                    let img = pipeline::read_image(path)?;
                    densityseg::kernel_size_for(img.width(), img.height())
                        .map_err(|e| CliError::data(path.display(), e))?
                }
                (None, None) => {
                    return Err(CliError::Usage(
                        "kernels needs --kernel-size or --image".into(),
                    ))
                }
            };
            let bank = make_bank(&cfg.gabor_params(size), cfg.orientations, size)
                .map_err(|e| CliError::data("building filter bank", e))?;
            for (k, (kernel, theta)) in bank.kernels().iter().zip(bank.thetas()).enumerate() {
                let path = out.join(format!("kernel_{k:02}.pgm"));
                let img = rescale_to_depth(&kernel.real_raster(), 8);
                pipeline::write_file(&path, &write_pgm(&img, false))?;
                println!("{k}\t{:.4}\t{size}\t{}", theta.to_degrees(), path.display());
            }
            Ok(Vec::new())
        }
        Command::Enhance { image, mask } => {
            let img = pipeline::read_image(image)?;
            let region = mask.as_deref().map(pipeline::read_binary).transpose()?;
            let enhanced = clahe_masked(&img, &cfg.clahe, region.as_ref())
                .map_err(|e| CliError::data(image.display(), e))?;
            let path = out.join(format!("{}_clahe.pgm", stem(image)?));
            pipeline::write_file(&path, &write_pgm(&enhanced, false))?;
            Ok(Vec::new())
        }
        Command::Segment { image, mask, id } => {
            let id = match id {
                Some(id) => id.clone(),
                None => stem(image)?,
            };
            let outcome = run_single(&id, image, mask, cfg)?;
            pipeline::write_outcome(out, &outcome)?;
            write_report(out, &[outcome.report])?;
            Ok(Vec::new())
        }
        Command::Batch { images, masks } => {
            let batch = run_batch(images, masks, cfg)?;
            for outcome in &batch.outcomes {
                pipeline::write_outcome(out, outcome)?;
            }
            write_report(out, &batch.rows())?;
            Ok(batch.warnings)
        }
        Command::Report { masks, dense } => {
            let (rows, warnings) = pipeline::recompute_report(masks, dense, cfg)?;
            write_report(out, &rows)?;
            Ok(warnings)
        }
    }
}

pub const REPORT_FILE: &str = "report.csv";

fn write_report(out: &Path, rows: &[DensityReport]) -> Result<(), CliError> {
    let path = out.join(REPORT_FILE);
    let mut buf = Vec::new();
    metrics::write_csv(&mut buf, rows).map_err(|e| CliError::Io {
        path: path.clone(),
        source: std::io::Error::other(e),
    })?;
    pipeline::write_file(&path, &buf)?;
    std::io::stdout()
        .write_all(&buf)
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn stem(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| CliError::Usage(format!("cannot derive an id from {}", path.display())))
}
