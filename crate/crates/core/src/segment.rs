//! Dual-threshold dense-tissue decision and binary morphology.

use crate::clahe::{clahe_masked, ClaheConfig};
use crate::convolve::FloatRaster;
use crate::error::{Error, Result};
use crate::gabor::{
    orientation_responses, superimpose, suppress_vessels, FilterBank, Superposition,
};
use crate::imageio::{BinaryMask, GrayImage};
use crate::par;

/// Statistic of the region intensities that thresholds are fractions of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    #[default]
    Max,
    Mean,
}

impl Reference {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reference::Max => "max",
            Reference::Mean => "mean",
        }
    }
}

impl std::str::FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(Reference::Max),
            "mean" => Ok(Reference::Mean),
            other => Err(Error::InvalidParameter(format!(
                "reference must be `max` or `mean`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Reference {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub t_low: f64,
    pub t_high: f64,
    pub reference: Reference,
    pub morph_radius: usize,
    pub gain: f64,
    pub superposition: Superposition,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            t_low: 0.60,
            t_high: 0.80,
            reference: Reference::Max,
            morph_radius: 3,
            gain: 1.0,
            superposition: Superposition::Max,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_low > 0.0 && self.t_low <= self.t_high && self.t_high <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy 0 < t_low <= t_high <= 1 (got {} and {})",
                self.t_low, self.t_high
            )));
        }
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gain must be >= 0, got {}",
                self.gain
            )));
        }
        Ok(())
    }
}

/// Region pixels at or above `fraction · reference`.
///
/// The reference is taken over region pixels only. A zero reference (no
/// intensity anywhere in the region) selects nothing.
pub fn threshold(
    image: &GrayImage,
    region: &BinaryMask,
    fraction: f64,
    reference: Reference,
) -> Result<BinaryMask> {
    if image.dims() != region.dims() {
        return Err(Error::mismatch(image.dims(), region.dims()));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "threshold fraction must be in [0, 1], got {fraction}"
        )));
    }
    let inside = image
        .pixels()
        .iter()
        .zip(region.bits())
        .filter_map(|(&p, &m)| m.then_some(p));
    let (count, sum, max) = inside.fold((0u64, 0u64, 0u16), |(n, s, m), p| {
        (n + 1, s + p as u64, m.max(p))
    });
    if count == 0 {
        return Err(Error::EmptyRegion);
    }
    let reference_value = match reference {
        Reference::Max => max as f64,
        Reference::Mean => sum as f64 / count as f64,
    };
    let (w, h) = image.dims();
    if reference_value == 0.0 {
        return Ok(BinaryMask::filled(w, h, false));
    }
    let cut = fraction * reference_value;
    let bits = image
        .pixels()
        .iter()
        .zip(region.bits())
        .map(|(&p, &m)| m && p as f64 >= cut)
        .collect();
    BinaryMask::new(w, h, bits)
}

pub fn and_masks(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    if a.dims() != b.dims() {
        return Err(Error::mismatch(a.dims(), b.dims()));
    }
    let bits = a
        .bits()
        .iter()
        .zip(b.bits())
        .map(|(&x, &y)| x && y)
        .collect();
    BinaryMask::new(a.width(), a.height(), bits)
}

/// Half-width of each row of the disk `{dx² + dy² ≤ r²}`, indexed by `dy + r`.
fn disk_spans(radius: usize) -> Vec<usize> {
    let r = radius as i64;
    (-r..=r)
        .map(|dy| {
            let rem = r * r - dy * dy;
            let mut dx = (rem as f64).sqrt() as i64;
            while dx * dx > rem {
                dx -= 1;
            }
            while (dx + 1) * (dx + 1) <= rem {
                dx += 1;
            }
            dx as usize
        })
        .collect()
}

/// Per-row inclusive prefix counts with a leading zero: `pre[r][c]` = trues in `[0, c)`.
fn row_prefix(mask: &BinaryMask) -> Vec<u32> {
    let (w, h) = mask.dims();
    let mut pre = vec![0u32; (w + 1) * h];
    for r in 0..h {
        let row = &mask.bits()[r * w..(r + 1) * w];
        let dst = &mut pre[r * (w + 1)..(r + 1) * (w + 1)];
        for c in 0..w {
            dst[c + 1] = dst[c] + row[c] as u32;
        }
    }
    pre
}

/// Erosion by a disk; samples outside the raster count as false.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let spans = disk_spans(radius);
    let pre = row_prefix(mask);
    let mut bits = vec![false; w * h];
    par::for_each_row(&mut bits, w, |y, row| {
        if y < radius || y + radius >= h {
            return;
        }
        for (x, out) in row.iter_mut().enumerate() {
            if !mask.get(y, x) {
                continue;
            }
            *out = spans.iter().enumerate().all(|(i, &hw)| {
                let yy = y + i - radius;
                if x < hw || x + hw >= w {
                    return false;
                }
                let base = yy * (w + 1);
                (pre[base + x + hw + 1] - pre[base + x - hw]) as usize == 2 * hw + 1
            });
        }
    });
    BinaryMask::new(w, h, bits).expect("same dimensions")
}

/// Dilation by a disk, clipped to the raster.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let spans = disk_spans(radius);
    let pre = row_prefix(mask);
    let mut bits = vec![false; w * h];
    par::for_each_row(&mut bits, w, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = spans.iter().enumerate().any(|(i, &hw)| {
                let yy = y as isize + i as isize - radius as isize;
                if yy < 0 || yy >= h as isize {
                    return false;
                }
                let lo = x.saturating_sub(hw);
                let hi = (x + hw + 1).min(w);
                let base = yy as usize * (w + 1);
                pre[base + hi] > pre[base + lo]
            });
        }
    });
    BinaryMask::new(w, h, bits).expect("same dimensions")
}

fn pad_mask(mask: &BinaryMask, margin: usize) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w + 2 * margin, h + 2 * margin, |r, c| {
        r >= margin
            && c >= margin
            && r < h + margin
            && c < w + margin
            && mask.get(r - margin, c - margin)
    })
}

fn unpad_mask(mask: &BinaryMask, margin: usize) -> BinaryMask {
    let (w, h) = (mask.width() - 2 * margin, mask.height() - 2 * margin);
    BinaryMask::from_fn(w, h, |r, c| mask.get(r + margin, c + margin))
}

/// Erosion then dilation with a disk of `radius`; removes specks narrower than the disk.
pub fn morph_open(mask: &BinaryMask, radius: usize) -> BinaryMask {
    dilate(&erode(mask, radius), radius)
}

/// Dilation then erosion with a disk of `radius`; fills gaps narrower than the disk.
///
/// The exterior is background: the dilation is allowed to spill past the
/// raster edge before the erosion, so closing never removes foreground at
/// the border.
pub fn morph_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let padded = pad_mask(mask, radius);
    unpad_mask(&erode(&dilate(&padded, radius), radius), radius)
}

/// Every intermediate of [`segment_dense`], for inspection and debug dumps.
#[derive(Debug, Clone)]
pub struct SegmentStages {
    pub enhanced: GrayImage,
    pub orientation_responses: Vec<FloatRaster>,
    pub response: FloatRaster,
    pub suppressed: GrayImage,
    pub low: BinaryMask,
    pub high: BinaryMask,
    pub fused: BinaryMask,
    pub dense: BinaryMask,
}

/// Runs the full decision pipeline and keeps every stage.
///
/// CLAHE (region-restricted) → bank response → vessel suppression →
/// `threshold(t_low) AND threshold(t_high)` → open → close → `AND region`.
pub fn segment_stages(
    roi: &GrayImage,
    region: &BinaryMask,
    bank: &FilterBank,
    clahe_cfg: &ClaheConfig,
    cfg: &SegmentConfig,
) -> Result<SegmentStages> {
    cfg.validate()?;
    if roi.dims() != region.dims() {
        return Err(Error::mismatch(roi.dims(), region.dims()));
    }
    let enhanced = clahe_masked(roi, clahe_cfg, Some(region))?;
    let orientation_responses = orientation_responses(&FloatRaster::from(&enhanced), bank)?;
    let response = superimpose(&orientation_responses, cfg.superposition)?;
    let suppressed = suppress_vessels(&enhanced, &response, cfg.gain)?;
    let low = threshold(&suppressed, region, cfg.t_low, cfg.reference)?;
    let high = threshold(&suppressed, region, cfg.t_high, cfg.reference)?;
    let fused = and_masks(&low, &high)?;
    let cleaned = morph_close(&morph_open(&fused, cfg.morph_radius), cfg.morph_radius);
    // closing can reach past concave region borders
    let dense = and_masks(&cleaned, region)?;
    Ok(SegmentStages {
        enhanced,
        orientation_responses,
        response,
        suppressed,
        low,
        high,
        fused,
        dense,
    })
}

/// Dense-tissue mask of `roi`, always a subset of `region`.
pub fn segment_dense(
    roi: &GrayImage,
    region: &BinaryMask,
    bank: &FilterBank,
    clahe_cfg: &ClaheConfig,
    cfg: &SegmentConfig,
) -> Result<BinaryMask> {
    segment_stages(roi, region, bank, clahe_cfg, cfg).map(|s| s.dense)
}
