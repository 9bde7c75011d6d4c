//! Mask application, left/right registration, and fibroglandular-disc ROI.
//!
//! The ROI is a band of rows centered on the widest breast row, half the
//! breast height tall, spanning columns from one third of the breast width
//! (measured from the chest wall) to the full width. Breasts are first
//! flipped so the chest wall sits on the left edge.

use crate::error::{Error, Result};
use crate::imageio::{BinaryMask, GrayImage};

/// Half-open box `[row0, row1) × [col0, col1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiBox {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

impl RoiBox {
    pub fn new(row0: usize, row1: usize, col0: usize, col1: usize) -> Self {
        Self {
            row0,
            row1,
            col0,
            col1,
        }
    }

    pub fn rows(&self) -> usize {
        self.row1 - self.row0
    }

    pub fn cols(&self) -> usize {
        self.col1 - self.col0
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if self.row0 < self.row1
            && self.row1 <= height
            && self.col0 < self.col1
            && self.col1 <= width
        {
            Ok(())
        } else {
            Err(Error::BoxOutOfBounds {
                row0: self.row0,
                row1: self.row1,
                col0: self.col0,
                col1: self.col1,
                width,
                height,
            })
        }
    }
}

/// Maximal breast dimensions, measured as foreground counts per row/column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BreastExtent {
    pub widest_row: usize,
    pub max_width: usize,
    pub tallest_col: usize,
    pub max_height: usize,
    pub leftmost_col: usize,
    pub rightmost_col: usize,
    pub top_row: usize,
    pub bottom_row: usize,
}

/// Zeroes every pixel outside `mask`.
pub fn apply_mask(image: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    if image.dims() != mask.dims() {
        return Err(Error::mismatch(image.dims(), mask.dims()));
    }
    let pixels = image
        .pixels()
        .iter()
        .zip(mask.bits())
        .map(|(&p, &m)| if m { p } else { 0 })
        .collect();
    GrayImage::new(image.width(), image.height(), image.bit_depth(), pixels)
}

/// Flips image and mask horizontally when the mask centroid is in the right half.
///
/// Returns the (possibly flipped) pair and whether a flip happened. A
/// centroid exactly on the vertical midline is left alone, which makes the
/// operation idempotent.
pub fn orient_left(image: &GrayImage, mask: &BinaryMask) -> Result<(GrayImage, BinaryMask, bool)> {
    if image.dims() != mask.dims() {
        return Err(Error::mismatch(image.dims(), mask.dims()));
    }
    let (mut sum, mut n) = (0u128, 0u128);
    for row in mask.bits().chunks(mask.width()) {
        for (c, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            sum += c as u128;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    // centroid > (width − 1) / 2, compared in integers: 2·sum > n·(width − 1)
    let flip = 2 * sum > n * (mask.width() as u128 - 1);
    if flip {
        Ok((image.flip_horizontal(), mask.flip_horizontal(), true))
    } else {
        Ok((image.clone(), mask.clone(), false))
    }
}

/// Widest row / tallest column and bounding extents of the mask.
///
/// Ties in the maxima go to the smallest index.
pub fn breast_extent(mask: &BinaryMask) -> Result<BreastExtent> {
    let (w, h) = mask.dims();
    let mut col_counts = vec![0usize; w];
    let mut row_counts = vec![0usize; h];
    for (r, row) in mask.bits().chunks(w.max(1)).enumerate() {
        for (c, &b) in row.iter().enumerate() {
            if b {
                row_counts[r] += 1;
                col_counts[c] += 1;
            }
        }
    }
    let argmax_first = |counts: &[usize]| {
        counts.iter().enumerate().fold(
            (0usize, 0usize),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
    };
    let (widest_row, max_width) = argmax_first(&row_counts);
    let (tallest_col, max_height) = argmax_first(&col_counts);
    if max_width == 0 {
        return Err(Error::EmptyMask);
    }
    let first_nonzero = |v: &[usize]| v.iter().position(|&x| x > 0).unwrap();
    let last_nonzero = |v: &[usize]| v.iter().rposition(|&x| x > 0).unwrap();
    Ok(BreastExtent {
        widest_row,
        max_width,
        tallest_col,
        max_height,
        leftmost_col: first_nonzero(&col_counts),
        rightmost_col: last_nonzero(&col_counts),
        top_row: first_nonzero(&row_counts),
        bottom_row: last_nonzero(&row_counts),
    })
}

/// Fibroglandular-disc box for a left-oriented breast.
///
/// Rows `[widest_row − max_height/4, widest_row + max_height/4)`, columns
/// `[leftmost_col + max_width/3, leftmost_col + max_width)`, clamped to the
/// image. Integer division floors.
pub fn roi_box(extent: &BreastExtent, width: usize, height: usize) -> Result<RoiBox> {
    if extent.max_width < 3 || extent.max_height < 4 {
        return Err(Error::DegenerateRoi {
            max_width: extent.max_width,
            max_height: extent.max_height,
        });
    }
    if extent.widest_row >= height || extent.leftmost_col >= width {
        return Err(Error::InvalidParameter(format!(
            "extent (row {}, col {}) lies outside a {width}x{height} image",
            extent.widest_row, extent.leftmost_col
        )));
    }
    let half_band = extent.max_height / 4;
    let row0 = extent.widest_row.saturating_sub(half_band);
    let row1 = (extent.widest_row + half_band).min(height).max(row0 + 1);
    let col0 = (extent.leftmost_col + extent.max_width / 3).min(width - 1);
    let col1 = (extent.leftmost_col + extent.max_width)
        .min(width)
        .max(col0 + 1);
    let b = RoiBox::new(row0, row1, col0, col1);
    b.check(width, height)?;
    Ok(b)
}

/// Copies the pixels inside `roi`.
pub fn crop(image: &GrayImage, roi: &RoiBox) -> Result<GrayImage> {
    roi.check(image.width(), image.height())?;
    let mut pixels = Vec::with_capacity(roi.rows() * roi.cols());
    for r in roi.row0..roi.row1 {
        let start = r * image.width();
        pixels.extend_from_slice(&image.pixels()[start + roi.col0..start + roi.col1]);
    }
    GrayImage::new(roi.cols(), roi.rows(), image.bit_depth(), pixels)
}

/// Mask counterpart of [`crop`].
pub fn crop_mask(mask: &BinaryMask, roi: &RoiBox) -> Result<BinaryMask> {
    roi.check(mask.width(), mask.height())?;
    let mut bits = Vec::with_capacity(roi.rows() * roi.cols());
    for r in roi.row0..roi.row1 {
        let start = r * mask.width();
        bits.extend_from_slice(&mask.bits()[start + roi.col0..start + roi.col1]);
    }
    BinaryMask::new(roi.cols(), roi.rows(), bits)
}

/// Places `patch` into a `width × height` all-false mask at `roi`.
pub fn paste_mask(
    patch: &BinaryMask,
    roi: &RoiBox,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    roi.check(width, height)?;
    if patch.dims() != (roi.cols(), roi.rows()) {
        return Err(Error::mismatch(patch.dims(), (roi.cols(), roi.rows())));
    }
    let mut out = BinaryMask::filled(width, height, false);
    for r in 0..roi.rows() {
        for c in 0..roi.cols() {
            out.set(roi.row0 + r, roi.col0 + c, patch.get(r, c));
        }
    }
    Ok(out)
}
