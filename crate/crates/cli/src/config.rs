//! `key = value` pipeline configuration.

use std::path::PathBuf;
use std::str::FromStr;

use densityseg::{
    CategoryEdges, ClaheConfig, GaborParams, Reference, SegmentConfig, Superposition,
};

use crate::CliError;

/// Every tunable of a run. `PipelineConfig::default()` is a valid configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub orientations: usize,
    /// Fixed kernel size; `None` derives it from the ROI.
    pub kernel_size: Option<usize>,
    pub gamma: f64,
    /// Kernel size divided by the wavelength.
    pub wavelength_ratio: f64,
    /// Envelope width as a multiple of the wavelength.
    pub sigma_ratio: f64,
    pub psi: f64,
    pub clahe: ClaheConfig,
    pub segment: SegmentConfig,
    pub category_edges: CategoryEdges,
    pub debug_stages: bool,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            orientations: 8,
            kernel_size: None,
            gamma: 0.5,
            wavelength_ratio: 4.0,
            sigma_ratio: 0.56,
            psi: 0.0,
            clahe: ClaheConfig::default(),
            segment: SegmentConfig::default(),
            category_edges: CategoryEdges::default(),
            debug_stages: false,
            out: PathBuf::from("."),
            jobs: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "orientations",
    "kernel_size",
    "gamma",
    "wavelength_ratio",
    "sigma_ratio",
    "psi",
    "tiles",
    "clip_limit",
    "bins",
    "t_low",
    "t_high",
    "reference",
    "gain",
    "morph_radius",
    "superposition",
    "category_edges",
    "debug_stages",
    "out",
    "jobs",
];

impl PipelineConfig {
    /// Gabor parameters for a kernel of `size` pixels (θ = 0).
    pub fn gabor_params(&self, size: usize) -> GaborParams {
        let lambda = size as f64 / self.wavelength_ratio;
        GaborParams {
            theta: 0.0,
            gamma: self.gamma,
            lambda,
            sigma: self.sigma_ratio * lambda,
            psi: self.psi,
        }
    }

    /// Applies `text` on top of `self`. Blank lines and `#` comments are skipped.
    pub fn merge_str(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "orientations" => self.orientations = parse(key, value)?,
            "kernel_size" => {
                self.kernel_size = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "gamma" => self.gamma = parse(key, value)?,
            "wavelength_ratio" => self.wavelength_ratio = parse(key, value)?,
            "sigma_ratio" => self.sigma_ratio = parse(key, value)?,
            "psi" => self.psi = parse(key, value)?,
            "tiles" => (self.clahe.tiles_x, self.clahe.tiles_y) = parse_tiles(value)?,
            "clip_limit" => self.clahe.clip_limit = parse(key, value)?,
            "bins" => self.clahe.bins = parse(key, value)?,
            "t_low" => self.segment.t_low = parse(key, value)?,
            "t_high" => self.segment.t_high = parse(key, value)?,
            "reference" => self.segment.reference = value.parse().map_err(|e| format!("{e}"))?,
            "gain" => self.segment.gain = parse(key, value)?,
            "morph_radius" => self.segment.morph_radius = parse(key, value)?,
            "superposition" => self.segment.superposition = parse_superposition(value)?,
            "category_edges" => self.category_edges = parse_edges(value)?,
            "debug_stages" => self.debug_stages = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "jobs" => self.jobs = parse(key, value)?,
            other => {
                return Err(format!(
                    "unknown key `{other}` (known keys: {})",
                    KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Rejects values the pipeline would fail on later.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: densityseg::Error| CliError::Usage(e.to_string());
        if self.orientations == 0 {
            return Err(CliError::Usage("orientations must be at least 1".into()));
        }
        if let Some(k) = self.kernel_size {
            if k < 3 || k % 2 == 0 {
                return Err(CliError::Usage(format!(
                    "kernel_size must be odd and >= 3, got {k}"
                )));
            }
        }
        if !(self.wavelength_ratio.is_finite() && self.wavelength_ratio > 0.0) {
            return Err(CliError::Usage("wavelength_ratio must be positive".into()));
        }
        self.gabor_params(self.kernel_size.unwrap_or(3))
            .validate()
            .map_err(usage)?;
        self.clahe.validate().map_err(usage)?;
        self.segment.validate().map_err(usage)?;
        Ok(())
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

/// `NxM`: N tiles across, M tiles down.
pub fn parse_tiles(value: &str) -> Result<(usize, usize), String> {
    let bad = || format!("tiles must look like `8x8`, got `{value}`");
    let (x, y) = value
        .to_ascii_lowercase()
        .split_once('x')
        .map(|(a, b)| (a.trim().to_owned(), b.trim().to_owned()))
        .ok_or_else(bad)?;
    let x = x.parse().map_err(|_| bad())?;
    let y = y.parse().map_err(|_| bad())?;
    Ok((x, y))
}

pub fn parse_superposition(value: &str) -> Result<Superposition, String> {
    match value.to_ascii_lowercase().as_str() {
        "max" => Ok(Superposition::Max),
        "sum" => Ok(Superposition::Sum),
        _ => Err(format!(
            "superposition must be `max` or `sum`, got `{value}`"
        )),
    }
}

pub fn parse_reference(value: &str) -> Result<Reference, String> {
    value.parse().map_err(|e: densityseg::Error| e.to_string())
}

fn parse_edges(value: &str) -> Result<CategoryEdges, String> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| parse("category_edges", p.trim()))
        .collect::<Result<_, _>>()?;
    let edges: [f64; 3] = parts
        .try_into()
        .map_err(|_| format!("category_edges needs three values, got `{value}`"))?;
    CategoryEdges::new(edges).map_err(|e| e.to_string())
}
