//! Gabor kernels, the oriented filter bank, and vessel suppression.
//!
//! A kernel samples the complex Gabor function
//!
//! ```text
//! g(x, y) = exp(−(x'² + γ² y'²) / 2σ²) · exp(i (2π x' / λ + ψ))
//! x' =  x cos θ + y sin θ
//! y' = −x sin θ + y cos θ
//! ```
//!
//! on an odd `size × size` grid centered at the origin, with `x` the column
//! offset and `y` the row offset. The bank holds `n` orientations
//! `θ_k = k·π/n`; only the even (real) part is convolved, after removing
//! its mean so flat tissue gives no response.

use std::f64::consts::PI;

use crate::convolve::{convolve2d, Border, FloatRaster, Kernel2d};
use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::par;

/// Response spans at or below this are treated as no response at all.
///
/// Zero-mean kernels over flat input leave only rounding residue (orders of
/// magnitude smaller); rescaling that residue to full range would subtract noise.
pub const RESPONSE_NOISE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    /// Orientation of the wave vector, radians.
    pub theta: f64,
    /// Spatial aspect ratio of the envelope.
    pub gamma: f64,
    /// Wavelength of the sinusoid, pixels per cycle.
    pub lambda: f64,
    /// Width of the Gaussian envelope, pixels.
    pub sigma: f64,
    /// Phase offset, radians.
    pub psi: f64,
}

impl GaborParams {
    /// Defaults tied to the kernel size: γ = 0.5, λ = size/4, σ = 0.56·λ, ψ = 0.
    ///
    /// That puts about four wavelengths across the kernel, a narrow-bar
    /// detector suited to vessels and fibrous strands.
    pub fn for_kernel_size(size: usize) -> Self {
        let lambda = size as f64 / 4.0;
        Self {
            theta: 0.0,
            gamma: 0.5,
            lambda,
            sigma: 0.56 * lambda,
            psi: 0.0,
        }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.lambda) || !ok(self.sigma) || !ok(self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "gabor lambda, sigma and gamma must be positive (got λ={}, σ={}, γ={})",
                self.lambda, self.sigma, self.gamma
            )));
        }
        if !self.theta.is_finite() || !self.psi.is_finite() {
            return Err(Error::InvalidParameter(
                "gabor theta and psi must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Sampled complex Gabor kernel, split into real and imaginary planes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    size: usize,
    real: Vec<f64>,
    imag: Vec<f64>,
}

impl GaborKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Real (even) part, row-major `size × size`.
    pub fn real(&self) -> &[f64] {
        &self.real
    }

    /// Imaginary (odd) part, row-major `size × size`.
    pub fn imag(&self) -> &[f64] {
        &self.imag
    }

    /// Real part at grid offset `(x, y)` from the center.
    pub fn real_at(&self, x: isize, y: isize) -> f64 {
        let h = (self.size / 2) as isize;
        self.real[((y + h) as usize) * self.size + (x + h) as usize]
    }

    pub fn imag_at(&self, x: isize, y: isize) -> f64 {
        let h = (self.size / 2) as isize;
        self.imag[((y + h) as usize) * self.size + (x + h) as usize]
    }

    /// Copy with the mean of the real part subtracted.
    pub fn zero_mean(&self) -> Self {
        let mean = self.real.iter().sum::<f64>() / self.real.len() as f64;
        Self {
            size: self.size,
            real: self.real.iter().map(|v| v - mean).collect(),
            imag: self.imag.clone(),
        }
    }

    pub fn real_kernel(&self) -> Kernel2d {
        Kernel2d::new(self.size, self.size, self.real.clone()).expect("gabor kernel size is odd")
    }

    pub fn real_raster(&self) -> FloatRaster {
        FloatRaster::new(self.size, self.size, self.real.clone()).expect("finite samples")
    }

    pub fn imag_raster(&self) -> FloatRaster {
        FloatRaster::new(self.size, self.size, self.imag.clone()).expect("finite samples")
    }
}

/// Samples the complex Gabor function on an odd `size × size` grid.
///
/// No normalization is applied here; see [`GaborKernel::zero_mean`].
pub fn make_kernel(params: &GaborParams, size: usize) -> Result<GaborKernel> {
    if size < 3 || size % 2 == 0 {
        return Err(Error::InvalidKernelSize(size));
    }
    params.validate()?;
    let half = (size / 2) as isize;
    let (sin_t, cos_t) = params.theta.sin_cos();
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    let gamma_sq = params.gamma * params.gamma;
    let mut real = Vec::with_capacity(size * size);
    let mut imag = Vec::with_capacity(size * size);
    for y in -half..=half {
        for x in -half..=half {
            let (x, y) = (x as f64, y as f64);
            let along = x * cos_t + y * sin_t;
            let across = y * cos_t - x * sin_t;
            let envelope = (-(along * along + gamma_sq * across * across) / two_sigma_sq).exp();
            let phase = 2.0 * PI * along / params.lambda + params.psi;
            let (s, c) = phase.sin_cos();
            real.push(envelope * c);
            imag.push(envelope * s);
        }
    }
    Ok(GaborKernel { size, real, imag })
}

/// Oriented bank of zero-mean kernels sharing everything but `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kernels: Vec<GaborKernel>,
    thetas: Vec<f64>,
}

impl FilterBank {
    pub fn kernels(&self) -> &[GaborKernel] {
        &self.kernels
    }

    /// Orientations in radians, strictly increasing in `[0, π)`.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kernel_size(&self) -> usize {
        self.kernels.first().map_or(0, GaborKernel::size)
    }
}

/// Builds kernels at `θ_k = k·π/n`, `k = 0..n`, each made zero-mean.
pub fn make_bank(base: &GaborParams, n_orientations: usize, size: usize) -> Result<FilterBank> {
    if n_orientations == 0 {
        return Err(Error::InvalidParameter(
            "bank needs at least one orientation".into(),
        ));
    }
    let thetas: Vec<f64> = (0..n_orientations)
        .map(|k| k as f64 * PI / n_orientations as f64)
        .collect();
    let kernels = thetas
        .iter()
        .map(|&t| make_kernel(&base.with_theta(t), size).map(|k| k.zero_mean()))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank { kernels, thetas })
}

/// Largest odd size strictly below a tenth of the shorter side, at least 3.
pub fn kernel_size_for(width: usize, height: usize) -> Result<usize> {
    let m = width.min(height);
    if m < 30 {
        return Err(Error::ImageTooSmall {
            width,
            height,
            min: 30,
        });
    }
    // largest k with 10·k < m
    let k = (m - 1) / 10;
    let k = if k % 2 == 0 { k - 1 } else { k };
    Ok(k.max(3))
}

/// How per-orientation responses are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Superposition {
    /// Pixelwise maximum of rectified responses.
    #[default]
    Max,
    /// Pixelwise sum of rectified responses.
    Sum,
}

/// Raw (unrectified) response of each bank kernel, in bank order.
pub fn orientation_responses(image: &FloatRaster, bank: &FilterBank) -> Result<Vec<FloatRaster>> {
    let size = bank.kernel_size();
    if size > image.width() || size > image.height() {
        return Err(Error::KernelTooLarge {
            kernel_w: size,
            kernel_h: size,
            width: image.width(),
            height: image.height(),
        });
    }
    par::map_slice(bank.kernels(), |k| {
        convolve2d(image, &k.real_kernel(), Border::Replicate)
    })
    .into_iter()
    .collect()
}

/// Folds responses in order after clipping negatives to zero.
pub fn superimpose(responses: &[FloatRaster], mode: Superposition) -> Result<FloatRaster> {
    let first = responses
        .first()
        .ok_or_else(|| Error::InvalidParameter("no responses to superimpose".into()))?;
    let (w, h) = first.dims();
    let mut acc = FloatRaster::zeros(w, h);
    for r in responses {
        if r.dims() != (w, h) {
            return Err(Error::mismatch((w, h), r.dims()));
        }
        for (a, &v) in acc.values_mut().iter_mut().zip(r.values()) {
            let v = v.max(0.0);
            *a = match mode {
                Superposition::Max => a.max(v),
                Superposition::Sum => *a + v,
            };
        }
    }
    Ok(acc)
}

/// Maximum of rectified per-orientation responses.
pub fn bank_response(image: &GrayImage, bank: &FilterBank) -> Result<FloatRaster> {
    bank_response_with(image, bank, Superposition::Max)
}

pub fn bank_response_with(
    image: &GrayImage,
    bank: &FilterBank,
    mode: Superposition,
) -> Result<FloatRaster> {
    let responses = orientation_responses(&FloatRaster::from(image), bank)?;
    superimpose(&responses, mode)
}

/// Subtracts the response, rescaled to the image's full range, from the image.
///
/// `out = clamp(image − gain · scaled_response, 0, 2^depth − 1)`, rounded
/// half-up. A response whose span is within [`RESPONSE_NOISE_FLOOR`] leaves
/// the image unchanged.
pub fn suppress_vessels(image: &GrayImage, response: &FloatRaster, gain: f64) -> Result<GrayImage> {
    if image.dims() != response.dims() {
        return Err(Error::mismatch(image.dims(), response.dims()));
    }
    if !gain.is_finite() || gain < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gain must be >= 0, got {gain}"
        )));
    }
    let (lo, hi) = response.min_max();
    let span = hi - lo;
    if gain == 0.0 || span <= RESPONSE_NOISE_FLOOR {
        return Ok(image.clone());
    }
    let maxval = image.max_value() as f64;
    let pixels = image
        .pixels()
        .iter()
        .zip(response.values())
        .map(|(&p, &r)| {
            let scaled = (r - lo) / span * maxval;
            let v = p as f64 - gain * scaled;
            (v.clamp(0.0, maxval) + 0.5).floor() as u16
        })
        .collect();
    GrayImage::new(image.width(), image.height(), image.bit_depth(), pixels)
}
