//! Single-image and batch drivers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use densityseg::{
    apply_mask, breast_extent, crop, crop_mask, kernel_size_for, make_bank, orient_left,
    paste_mask, read_mask, read_pgm, rescale_to_depth, roi_box, segment_stages, write_mask_pgm,
    write_pgm, BinaryMask, DensityReport, Error, FloatRaster, GrayImage, RoiBox, SegmentStages,
};

use crate::config::PipelineConfig;
use crate::CliError;

/// Everything one image produces.
#[derive(Debug, Clone)]
pub struct SingleOutcome {
    pub report: DensityReport,
    /// Dense mask in the original frame and orientation.
    pub dense: BinaryMask,
    pub roi: RoiBox,
    pub flipped: bool,
    pub kernel_size: usize,
    /// Intermediates in ROI coordinates, kept when debug dumps are on.
    pub stages: Option<Stages>,
}

#[derive(Debug, Clone)]
pub struct Stages {
    pub roi_image: GrayImage,
    pub region: BinaryMask,
    pub segment: SegmentStages,
}

pub fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    let bytes = read_bytes(path)?;
    read_pgm(&bytes).map_err(|e| CliError::data(path.display(), e))
}

pub fn read_binary(path: &Path) -> Result<BinaryMask, CliError> {
    let bytes = read_bytes(path)?;
    read_mask(&bytes).map_err(|e| CliError::data(path.display(), e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Runs the pipeline on an in-memory pair.
pub fn process(
    id: &str,
    image: &GrayImage,
    breast: &BinaryMask,
    cfg: &PipelineConfig,
) -> Result<SingleOutcome, Error> {
    let (w, h) = image.dims();
    let masked = apply_mask(image, breast)?;
    let (oriented, mask, flipped) = orient_left(&masked, breast)?;
    let roi = roi_box(&breast_extent(&mask)?, w, h)?;
    let roi_image = crop(&oriented, &roi)?;
    let region = crop_mask(&mask, &roi)?;
    let kernel_size = match cfg.kernel_size {
        Some(k) => k,
        None => kernel_size_for(roi.cols(), roi.rows())?,
    };
    let bank = make_bank(
        &cfg.gabor_params(kernel_size),
        cfg.orientations,
        kernel_size,
    )?;
    let stages = segment_stages(&roi_image, &region, &bank, &cfg.clahe, &cfg.segment)?;

    let mut dense = paste_mask(&stages.dense, &roi, w, h)?;
    if flipped {
        dense = dense.flip_horizontal();
    }
    let report = DensityReport::from_masks(
        id,
        &dense,
        breast,
        cfg.segment.reference,
        &cfg.category_edges,
    )?;
    let stages = cfg.debug_stages.then_some(Stages {
        roi_image,
        region,
        segment: stages,
    });
    Ok(SingleOutcome {
        report,
        dense,
        roi,
        flipped,
        kernel_size,
        stages,
    })
}

/// Reads a pair from disk and runs the pipeline on it.
pub fn run_single(
    id: &str,
    image_path: &Path,
    mask_path: &Path,
    cfg: &PipelineConfig,
) -> Result<SingleOutcome, CliError> {
    let image = read_image(image_path)?;
    let breast = read_binary(mask_path)?;
    if image.dims() != breast.dims() {
        let (iw, ih) = image.dims();
        let (mw, mh) = breast.dims();
        return Err(CliError::data(
            format!(
                "{} is {iw}x{ih} but {} is {mw}x{mh}",
                image_path.display(),
                mask_path.display()
            ),
            Error::DimensionMismatch {
                left_w: iw,
                left_h: ih,
                right_w: mw,
                right_h: mh,
            },
        ));
    }
    process(id, &image, &breast, cfg).map_err(|e| CliError::data(image_path.display(), e))
}

pub fn dense_path(out: &Path, id: &str) -> PathBuf {
    out.join(format!("{id}_dense.pgm"))
}

/// Writes `<id>_dense.pgm` and, when present, the stage dumps under `<id>_stages/`.
pub fn write_outcome(out: &Path, outcome: &SingleOutcome) -> Result<(), CliError> {
    let id = &outcome.report.image_id;
    write_file(&dense_path(out, id), &encode_mask(&outcome.dense)?)?;
    if let Some(stages) = &outcome.stages {
        write_stages(&out.join(format!("{id}_stages")), stages)?;
    }
    Ok(())
}

fn encode_mask(mask: &BinaryMask) -> Result<Vec<u8>, CliError> {
    write_mask_pgm(mask).map_err(|e| CliError::data("encoding mask", e))
}

fn write_stages(dir: &Path, stages: &Stages) -> Result<(), CliError> {
    create_dir(dir)?;
    let s = &stages.segment;
    let image = |name: &str, img: &GrayImage| write_file(&dir.join(name), &write_pgm(img, false));
    let raster = |name: &str, r: &FloatRaster| image(name, &rescale_to_depth(r, 8));
    let mask = |name: &str, m: &BinaryMask| write_file(&dir.join(name), &encode_mask(m)?);

    image("roi.pgm", &stages.roi_image)?;
    mask("region.pgm", &stages.region)?;
    image("enhanced.pgm", &s.enhanced)?;
    for (k, r) in s.orientation_responses.iter().enumerate() {
        raster(&format!("orientation_{k:02}.pgm"), r)?;
    }
    raster("response.pgm", &s.response)?;
    image("suppressed.pgm", &s.suppressed)?;
    mask("low.pgm", &s.low)?;
    mask("high.pgm", &s.high)?;
    mask("fused.pgm", &s.fused)?;
    mask("dense.pgm", &s.dense)?;
    Ok(())
}

/// Files of `dir` keyed by stem, sorted.
pub fn files_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let io = |source| CliError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();
    let mut out = BTreeMap::new();
    for path in paths {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.entry(stem.to_owned()).or_insert(path);
        }
    }
    Ok(out)
}

/// Pairs left and right entries by key. Unmatched keys become warnings, in key order.
pub fn pair_up(
    left: &BTreeMap<String, PathBuf>,
    right: &BTreeMap<String, PathBuf>,
    right_name: &str,
    left_name: &str,
) -> (Vec<(String, PathBuf, PathBuf)>, Vec<String>) {
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let keys: std::collections::BTreeSet<&String> = left.keys().chain(right.keys()).collect();
    for key in keys {
        match (left.get(key), right.get(key)) {
            (Some(l), Some(r)) => pairs.push((key.clone(), l.clone(), r.clone())),
            (Some(l), None) => warnings.push(format!(
                "{key}: no {right_name} for {}, skipped",
                l.display()
            )),
            (None, Some(r)) => warnings.push(format!(
                "{key}: no {left_name} for {}, skipped",
                r.display()
            )),
            (None, None) => unreachable!(),
        }
    }
    (pairs, warnings)
}

/// Result of a batch: rows sorted by id plus warnings in id order.
#[derive(Debug)]
pub struct BatchOutcome {
    pub outcomes: Vec<SingleOutcome>,
    pub warnings: Vec<String>,
}

impl BatchOutcome {
    pub fn rows(&self) -> Vec<DensityReport> {
        self.outcomes.iter().map(|o| o.report.clone()).collect()
    }
}

/// Segments every pair of `image_dir` and `mask_dir` sharing a file stem.
///
/// Pairs run concurrently. The first failing pair in id order aborts the batch.
pub fn run_batch(
    image_dir: &Path,
    mask_dir: &Path,
    cfg: &PipelineConfig,
) -> Result<BatchOutcome, CliError> {
    let images = files_by_stem(image_dir)?;
    let masks = files_by_stem(mask_dir)?;
    let (pairs, warnings) = pair_up(&images, &masks, "mask", "image");
    if pairs.is_empty() {
        return Err(CliError::NoPairs {
            left: image_dir.to_owned(),
            right: mask_dir.to_owned(),
        });
    }
    let results =
        densityseg::par::map_slice(&pairs, |(id, image, mask)| run_single(id, image, mask, cfg));
    let outcomes = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(BatchOutcome { outcomes, warnings })
}

/// Recomputes report rows from breast masks and previously written dense masks.
///
/// Dense masks are matched on their stem with any `_dense` suffix removed.
pub fn recompute_report(
    mask_dir: &Path,
    dense_dir: &Path,
    cfg: &PipelineConfig,
) -> Result<(Vec<DensityReport>, Vec<String>), CliError> {
    let masks = files_by_stem(mask_dir)?;
    let dense: BTreeMap<String, PathBuf> = files_by_stem(dense_dir)?
        .into_iter()
        .map(|(stem, path)| {
            (
                stem.strip_suffix("_dense")
                    .map(str::to_owned)
                    .unwrap_or(stem),
                path,
            )
        })
        .collect();
    let (pairs, warnings) = pair_up(&masks, &dense, "dense mask", "breast mask");
    if pairs.is_empty() {
        return Err(CliError::NoPairs {
            left: mask_dir.to_owned(),
            right: dense_dir.to_owned(),
        });
    }
    let rows = pairs
        .iter()
        .map(|(id, breast_path, dense_path)| {
            let breast = read_binary(breast_path)?;
            let dense = read_binary(dense_path)?;
            DensityReport::from_masks(
                id.as_str(),
                &dense,
                &breast,
                cfg.segment.reference,
                &cfg.category_edges,
            )
            .map_err(|e| CliError::data(dense_path.display(), e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((rows, warnings))
}
