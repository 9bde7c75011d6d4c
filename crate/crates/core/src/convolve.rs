//! Spatial 2D convolution with an explicit border policy.
//!
//! The input is padded once according to the [`Border`] policy, then each
//! output row accumulates `kernel_weight * shifted_input_row` over all
//! kernel taps. The inner loop is a contiguous multiply-add over a row, so
//! it vectorizes well, and every output sample is summed in the same fixed
//! tap order regardless of how rows are scheduled across threads.

use crate::error::{Error, Result};
use crate::imageio::{max_for_depth, GrayImage};
use crate::par;

/// Row-major `f64` raster: filter responses and other intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatRaster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatRaster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "raster buffer holds {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(
                "raster contains non-finite values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// `(min, max)`; `(0, 0)` for an empty raster.
    pub fn min_max(&self) -> (f64, f64) {
        if self.values.is_empty() {
            return (0.0, 0.0);
        }
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

impl From<&GrayImage> for FloatRaster {
    fn from(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            values: img.pixels().iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Dense 2D kernel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2d {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Kernel2d {
    /// Both dimensions must be odd so the kernel has a center tap.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel dimensions must be odd, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "kernel buffer holds {} values, expected {}",
                values.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn identity() -> Self {
        Self {
            width: 1,
            height: 1,
            values: vec![1.0],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// How samples outside the raster are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Border {
    /// Clamp coordinates to the nearest edge sample.
    #[default]
    Replicate,
    /// Treat outside samples as 0.
    Zero,
}

/// True convolution (kernel flipped); output has the input's dimensions.
///
/// `out(r, c) = Σ k(u, v) · in(r − u + h, c − v + w)` with `(h, w)` the
/// kernel half-sizes.
pub fn convolve2d(input: &FloatRaster, kernel: &Kernel2d, border: Border) -> Result<FloatRaster> {
    if kernel.width > input.width || kernel.height > input.height {
        return Err(Error::KernelTooLarge {
            kernel_w: kernel.width,
            kernel_h: kernel.height,
            width: input.width,
            height: input.height,
        });
    }
    let (w, h) = input.dims();
    let (kw, kh) = (kernel.width, kernel.height);
    let (hw, hh) = (kw / 2, kh / 2);
    let padded = pad(input, hw, hh, border);
    let pw = w + 2 * hw;

    // Correlating the padded input with the flipped kernel is the convolution.
    let flipped: Vec<f64> = kernel.values.iter().rev().copied().collect();

    let accumulate = row_accumulator();
    let mut out = vec![0.0; w * h];
    par::for_each_row(&mut out, w, |r, acc| {
        for a in 0..kh {
            let prow = &padded[(r + a) * pw..(r + a + 1) * pw];
            accumulate(acc, &flipped[a * kw..(a + 1) * kw], prow);
        }
    });
    Ok(FloatRaster {
        width: w,
        height: h,
        values: out,
    })
}

/// Convenience wrapper for integer images.
pub fn convolve_image(image: &GrayImage, kernel: &Kernel2d, border: Border) -> Result<FloatRaster> {
    convolve2d(&FloatRaster::from(image), kernel, border)
}

type RowAccumulator = fn(&mut [f64], &[f64], &[f64]);

/// `acc[c] += Σ_b krow[b] · prow[c + b]`, taps in order, one multiply and one
/// add per tap (never fused), so every variant rounds identically.
#[inline(always)]
fn accumulate_row_generic(acc: &mut [f64], krow: &[f64], prow: &[f64]) {
    let w = acc.len();
    for (b, &weight) in krow.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (o, &s) in acc.iter_mut().zip(&prow[b..b + w]) {
            *o += weight * s;
        }
    }
}

fn accumulate_row_portable(acc: &mut [f64], krow: &[f64], prow: &[f64]) {
    accumulate_row_generic(acc, krow, prow)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn accumulate_row_avx(acc: &mut [f64], krow: &[f64], prow: &[f64]) {
    accumulate_row_generic(acc, krow, prow)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn accumulate_row_avx512(acc: &mut [f64], krow: &[f64], prow: &[f64]) {
    accumulate_row_generic(acc, krow, prow)
}

/// Widest vector variant the running CPU supports.
fn row_accumulator() -> RowAccumulator {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            // SAFETY: the required target feature was detected at runtime.
            return |acc, krow, prow| unsafe { accumulate_row_avx512(acc, krow, prow) };
        }
        if std::is_x86_feature_detected!("avx") {
            // SAFETY: as above.
            return |acc, krow, prow| unsafe { accumulate_row_avx(acc, krow, prow) };
        }
    }
    accumulate_row_portable
}

fn pad(input: &FloatRaster, hw: usize, hh: usize, border: Border) -> Vec<f64> {
    let (w, h) = input.dims();
    let pw = w + 2 * hw;
    let ph = h + 2 * hh;
    let mut out = vec![0.0; pw * ph];
    for pr in 0..ph {
        let sr = match border {
            Border::Replicate => pr.saturating_sub(hh).min(h - 1),
            Border::Zero => {
                if pr < hh || pr >= hh + h {
                    continue;
                }
                pr - hh
            }
        };
        let src = &input.values[sr * w..(sr + 1) * w];
        let dst = &mut out[pr * pw..(pr + 1) * pw];
        dst[hw..hw + w].copy_from_slice(src);
        if border == Border::Replicate {
            dst[..hw].fill(src[0]);
            dst[hw + w..].fill(src[w - 1]);
        }
    }
    out
}

/// Affine map `[min, max] → [0, 2^depth − 1]` with round-half-up.
///
/// A constant raster maps to all zeros.
pub fn rescale_to_depth(raster: &FloatRaster, depth: u8) -> GrayImage {
    let maxval = max_for_depth(depth);
    let (lo, hi) = raster.min_max();
    let span = hi - lo;
    let pixels = if span > 0.0 {
        raster
            .values
            .iter()
            .map(|&v| {
                let scaled = (v - lo) / span * maxval as f64;
                (scaled + 0.5).floor().clamp(0.0, maxval as f64) as u16
            })
            .collect()
    } else {
        vec![0; raster.values.len()]
    };
    GrayImage::new(raster.width, raster.height, depth, pixels)
        .expect("rescaled raster satisfies image invariants")
}
