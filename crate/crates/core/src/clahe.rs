//! Contrast Limited Adaptive Histogram Equalization.
//!
//! The image is split into a `tiles_x × tiles_y` grid (the last tile in
//! each direction absorbs the remainder). Each tile gets a clipped,
//! equalized mapping; every pixel is then mapped through the four
//! surrounding tile mappings and blended bilinearly by its position
//! relative to the tile centers. Pixels beyond the outermost centers
//! blend only the one or two mappings available.
//!
//! When a region mask is supplied, only region pixels enter histograms and
//! pixels outside it come out as 0.

use crate::error::{Error, Result};
use crate::imageio::{BinaryMask, GrayImage};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaheConfig {
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Per-bin cap as a multiple of the mean bin count (`tile_pixels / bins`).
    pub clip_limit: f64,
    pub bins: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        Self {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: 4.0,
            bins: 256,
        }
    }
}

impl ClaheConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tiles_x == 0 || self.tiles_y == 0 {
            return Err(Error::InvalidParameter(
                "CLAHE tile grid must be at least 1x1".into(),
            ));
        }
        if !(self.clip_limit.is_finite() && self.clip_limit > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "CLAHE clip limit must be positive, got {}",
                self.clip_limit
            )));
        }
        if !(2..=65536).contains(&self.bins) {
            return Err(Error::InvalidParameter(format!(
                "CLAHE bin count must be in 2..=65536, got {}",
                self.bins
            )));
        }
        Ok(())
    }

    /// Absolute per-bin cap for a histogram holding `pixels` samples (at least 1).
    pub fn absolute_limit(&self, pixels: u64) -> u64 {
        ((self.clip_limit * pixels as f64 / self.bins as f64).floor() as u64).max(1)
    }
}

/// Cuts bins at `limit` and spreads the excess evenly in one pass.
///
/// Each bin receives `excess / bins`; the remainder goes one count per bin
/// from bin 0 upward. The total is conserved exactly; redistributed counts
/// may push a bin back above `limit` (no second pass).
pub fn clip_histogram(hist: &[u64], limit: u64) -> Vec<u64> {
    let limit = limit.max(1);
    let mut out: Vec<u64> = hist.iter().map(|&h| h.min(limit)).collect();
    let excess: u64 = hist.iter().map(|&h| h.saturating_sub(limit)).sum();
    if excess == 0 || out.is_empty() {
        return out;
    }
    let n = out.len() as u64;
    let each = excess / n;
    let remainder = (excess % n) as usize;
    for (i, v) in out.iter_mut().enumerate() {
        *v += each + u64::from(i < remainder);
    }
    out
}

/// Equalizing map from a (clipped) histogram to output intensities.
///
/// `m(b) = round((cdf(b) − cdf_min) / (total − cdf_min) · maxval)`, rounded
/// half-up and floored at 0, with `cdf_min` the smallest nonzero cdf. When
/// every count sits in one bin the map is the identity on bin values.
pub fn equalization_map(hist: &[u64], maxval: u16) -> Vec<u16> {
    let bins = hist.len();
    let total: u64 = hist.iter().sum();
    let mut cdf = Vec::with_capacity(bins);
    let mut run = 0u64;
    for &h in hist {
        run += h;
        cdf.push(run);
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    let den = total.saturating_sub(cdf_min) as u128;
    if den == 0 {
        return (0..bins).map(|b| bin_value(b, bins, maxval)).collect();
    }
    cdf.iter()
        .map(|&c| {
            let num = c.saturating_sub(cdf_min) as u128 * maxval as u128;
            // round-half-up of num/den in integers
            ((2 * num + den) / (2 * den)) as u16
        })
        .collect()
}

/// Lowest intensity falling into bin `b`.
fn bin_value(b: usize, bins: usize, maxval: u16) -> u16 {
    ((b as u64 * (maxval as u64 + 1)) / bins as u64) as u16
}

#[inline]
fn bin_of(v: u16, bins: usize, maxval: u16) -> usize {
    ((v as u64 * bins as u64) / (maxval as u64 + 1)) as usize
}

/// Per-tile equalization maps, row-major over the tile grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TileMappings {
    tiles_x: usize,
    tiles_y: usize,
    maps: Vec<Vec<u16>>,
    x_edges: Vec<usize>,
    y_edges: Vec<usize>,
}

impl TileMappings {
    pub fn tiles_x(&self) -> usize {
        self.tiles_x
    }

    pub fn tiles_y(&self) -> usize {
        self.tiles_y
    }

    /// Map for tile `(ty, tx)`, indexed by histogram bin.
    pub fn get(&self, ty: usize, tx: usize) -> &[u16] {
        &self.maps[ty * self.tiles_x + tx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u16]> {
        self.maps.iter().map(Vec::as_slice)
    }

    /// Tile boundaries along x: tile `i` spans `[x_edges[i], x_edges[i+1])`.
    pub fn x_edges(&self) -> &[usize] {
        &self.x_edges
    }

    pub fn y_edges(&self) -> &[usize] {
        &self.y_edges
    }
}

fn tile_edges(len: usize, tiles: usize) -> Vec<usize> {
    let step = len / tiles;
    let mut edges: Vec<usize> = (0..tiles).map(|i| i * step).collect();
    edges.push(len);
    edges
}

fn check_inputs(image: &GrayImage, config: &ClaheConfig, mask: Option<&BinaryMask>) -> Result<()> {
    config.validate()?;
    if config.tiles_x > image.width() || config.tiles_y > image.height() {
        return Err(Error::InvalidParameter(format!(
            "CLAHE grid {}x{} exceeds image {}x{}",
            config.tiles_x,
            config.tiles_y,
            image.width(),
            image.height()
        )));
    }
    if let Some(m) = mask {
        if m.dims() != image.dims() {
            return Err(Error::mismatch(image.dims(), m.dims()));
        }
    }
    Ok(())
}

/// Computes the clipped equalization map of every tile.
///
/// A tile without any region pixels borrows the map built from all region
/// pixels of the image.
pub fn tile_mappings(
    image: &GrayImage,
    config: &ClaheConfig,
    mask: Option<&BinaryMask>,
) -> Result<TileMappings> {
    check_inputs(image, config, mask)?;
    let (w, h) = image.dims();
    let maxval = image.max_value();
    let bins = config.bins;
    let x_edges = tile_edges(w, config.tiles_x);
    let y_edges = tile_edges(h, config.tiles_y);
    let inside = |idx: usize| mask.is_none_or(|m| m.bits()[idx]);

    let histograms: Vec<Vec<u64>> = par::map_range(config.tiles_x * config.tiles_y, |t| {
        let (ty, tx) = (t / config.tiles_x, t % config.tiles_x);
        let mut hist = vec![0u64; bins];
        for r in y_edges[ty]..y_edges[ty + 1] {
            for c in x_edges[tx]..x_edges[tx + 1] {
                let idx = r * w + c;
                if inside(idx) {
                    hist[bin_of(image.pixels()[idx], bins, maxval)] += 1;
                }
            }
        }
        hist
    });

    let build = |hist: &[u64]| {
        let n: u64 = hist.iter().sum();
        equalization_map(&clip_histogram(hist, config.absolute_limit(n)), maxval)
    };
    let needs_fallback = histograms.iter().any(|h| h.iter().all(|&v| v == 0));
    let fallback = needs_fallback.then(|| {
        let mut global = vec![0u64; bins];
        for h in &histograms {
            for (g, v) in global.iter_mut().zip(h) {
                *g += v;
            }
        }
        build(&global)
    });
    let maps = histograms
        .iter()
        .map(|h| match &fallback {
            Some(f) if h.iter().all(|&v| v == 0) => f.clone(),
            _ => build(h),
        })
        .collect();

    Ok(TileMappings {
        tiles_x: config.tiles_x,
        tiles_y: config.tiles_y,
        maps,
        x_edges,
        y_edges,
    })
}

/// Neighbouring tile indices and the weight of the second one, per coordinate.
fn interpolation_axis(len: usize, edges: &[usize]) -> Vec<(usize, usize, f64)> {
    let tiles = edges.len() - 1;
    let centers: Vec<f64> = (0..tiles)
        .map(|i| (edges[i] + edges[i + 1] - 1) as f64 / 2.0)
        .collect();
    (0..len)
        .map(|p| {
            let p = p as f64;
            if p <= centers[0] {
                return (0, 0, 0.0);
            }
            if p >= centers[tiles - 1] {
                return (tiles - 1, tiles - 1, 0.0);
            }
            let i = centers.partition_point(|&c| c <= p) - 1;
            let t = (p - centers[i]) / (centers[i + 1] - centers[i]);
            (i, i + 1, t)
        })
        .collect()
}

/// CLAHE over the whole image.
pub fn clahe(image: &GrayImage, config: &ClaheConfig) -> Result<GrayImage> {
    clahe_masked(image, config, None)
}

/// CLAHE restricted to `mask` when given; pixels outside it become 0.
pub fn clahe_masked(
    image: &GrayImage,
    config: &ClaheConfig,
    mask: Option<&BinaryMask>,
) -> Result<GrayImage> {
    let maps = tile_mappings(image, config, mask)?;
    let (w, h) = image.dims();
    let maxval = image.max_value();
    let bins = config.bins;
    let xs = interpolation_axis(w, &maps.x_edges);
    let ys = interpolation_axis(h, &maps.y_edges);

    let mut out = vec![0u16; w * h];
    par::for_each_row(&mut out, w, |r, row| {
        let (ty0, ty1, wy) = ys[r];
        for (c, o) in row.iter_mut().enumerate() {
            let idx = r * w + c;
            if mask.is_some_and(|m| !m.bits()[idx]) {
                continue;
            }
            let b = bin_of(image.pixels()[idx], bins, maxval);
            let (tx0, tx1, wx) = xs[c];
            let m = |ty: usize, tx: usize| maps.get(ty, tx)[b] as f64;
            let top = (1.0 - wx) * m(ty0, tx0) + wx * m(ty0, tx1);
            let bottom = (1.0 - wx) * m(ty1, tx0) + wx * m(ty1, tx1);
            let v = (1.0 - wy) * top + wy * bottom;
            *o = (v + 0.5).floor().clamp(0.0, maxval as f64) as u16;
        }
    });
    GrayImage::new(w, h, image.bit_depth(), out)
}
