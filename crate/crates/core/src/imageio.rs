//! Raster containers and Netpbm (PGM/PBM) codecs.
//!
//! Reading accepts P2/P5 grayscale and, for masks, P1/P4 bitmaps. Header
//! comments (`#` to end of line) are accepted wherever whitespace is; the
//! writer never emits them. A maxval below the container maximum is kept
//! as-is: samples are not rescaled, only the bit depth is chosen (8 when
//! maxval ≤ 255, else 16).

use thiserror::Error;

use crate::error::{Error, Result};

/// Row-major grayscale image with an explicit bit depth of 8 or 16.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, bit_depth: u8, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::InvalidImage(format!(
                "bit depth must be 8 or 16, got {bit_depth}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "buffer holds {} samples, expected {}",
                pixels.len(),
                width * height
            )));
        }
        let max = max_for_depth(bit_depth);
        if let Some(&v) = pixels.iter().find(|&&v| v > max) {
            return Err(Error::InvalidImage(format!(
                "sample {v} exceeds {max} for depth {bit_depth}"
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    /// All-zero image.
    pub fn zeros(width: usize, height: usize, bit_depth: u8) -> Result<Self> {
        Self::new(width, height, bit_depth, vec![0; width * height])
    }

    /// Builds an image from `f(row, col)`; values above the depth maximum are clamped.
    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self> {
        let max = max_for_depth(bit_depth);
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c).min(max));
            }
        }
        Self::new(width, height, bit_depth, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Largest representable sample, `2^depth - 1`.
    pub fn max_value(&self) -> u16 {
        max_for_depth(self.bit_depth)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.pixels[row * self.width + col]
    }

    pub fn into_pixels(self) -> Vec<u16> {
        self.pixels
    }

    /// Horizontal mirror.
    pub fn flip_horizontal(&self) -> Self {
        let mut pixels = self.pixels.clone();
        for row in pixels.chunks_mut(self.width) {
            row.reverse();
        }
        Self { pixels, ..*self }
    }
}

/// `2^depth - 1` for depth 8 or 16.
pub(crate) fn max_for_depth(bit_depth: u8) -> u16 {
    if bit_depth >= 16 {
        u16::MAX
    } else {
        (1u16 << bit_depth) - 1
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask buffer holds {} samples, expected {}",
                bits.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            bits,
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    /// Number of true pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut bits = self.bits.clone();
        for row in bits.chunks_mut(self.width.max(1)) {
            row.reverse();
        }
        Self { bits, ..*self }
    }

    /// 8-bit rendering: true → 255, false → 0.
    pub fn to_image(&self) -> Result<GrayImage> {
        GrayImage::new(
            self.width,
            self.height,
            8,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
    }
}

/// Netpbm decoding failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bad magic number {0:?}")]
    BadMagic(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("nonpositive dimensions {width}x{height}")]
    NonPositiveDimensions { width: i64, height: i64 },
    #[error("maxval {0} out of range 1..=65535")]
    MaxvalOutOfRange(i64),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleOutOfRange { value: u64, maxval: u16 },
    #[error("invalid ASCII sample {0:?}")]
    InvalidSample(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    AsciiBitmap,  // P1
    AsciiGray,    // P2
    BinaryBitmap, // P4
    BinaryGray,   // P5
}

struct Decoded {
    width: usize,
    height: usize,
    maxval: u16,
    samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !self.bytes[self.pos].is_ascii_whitespace()
            && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_int(&mut self, what: &str) -> std::result::Result<i64, DecodeError> {
        let tok = self
            .token()
            .ok_or_else(|| DecodeError::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| {
                DecodeError::MalformedHeader(format!(
                    "{what} is not an integer: {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

fn decode(bytes: &[u8], allow_bitmap: bool) -> std::result::Result<Decoded, DecodeError> {
    let magic = bytes.get(..2).unwrap_or(bytes);
    let format = match magic {
        b"P1" if allow_bitmap => Format::AsciiBitmap,
        b"P2" => Format::AsciiGray,
        b"P4" if allow_bitmap => Format::BinaryBitmap,
        b"P5" => Format::BinaryGray,
        _ => {
            return Err(DecodeError::BadMagic(
                String::from_utf8_lossy(magic).into_owned(),
            ))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(DecodeError::BadMagic(
            String::from_utf8_lossy(&bytes[..3]).into_owned(),
        ));
    }

    let w = cur.header_int("width")?;
    let h = cur.header_int("height")?;
    if w <= 0 || h <= 0 {
        return Err(DecodeError::NonPositiveDimensions {
            width: w,
            height: h,
        });
    }
    let (width, height) = (w as usize, h as usize);
    let total = width
        .checked_mul(height)
        .ok_or_else(|| DecodeError::MalformedHeader(format!("{width}x{height} overflows")))?;

    let maxval = match format {
        Format::AsciiBitmap | Format::BinaryBitmap => 1,
        _ => {
            let m = cur.header_int("maxval")?;
            if !(1..=65535).contains(&m) {
                return Err(DecodeError::MaxvalOutOfRange(m));
            }
            m as u16
        }
    };

    let samples = match format {
        Format::AsciiGray => decode_ascii_gray(&mut cur, total, maxval)?,
        Format::AsciiBitmap => decode_ascii_bitmap(&mut cur, total)?,
        Format::BinaryGray => {
            // exactly one whitespace byte separates the header from the raster
            let start = cur.pos + 1;
            let payload = bytes.get(start..).unwrap_or(&[]);
            decode_binary_gray(payload, total, maxval)?
        }
        Format::BinaryBitmap => {
            let start = cur.pos + 1;
            let payload = bytes.get(start..).unwrap_or(&[]);
            decode_binary_bitmap(payload, width, height)?
        }
    };

    Ok(Decoded {
        width,
        height,
        maxval,
        samples,
    })
}

fn decode_ascii_gray(
    cur: &mut Cursor<'_>,
    total: usize,
    maxval: u16,
) -> std::result::Result<Vec<u16>, DecodeError> {
    let mut out = Vec::with_capacity(total.min(cur.bytes.len()));
    while out.len() < total {
        let Some(tok) = cur.token() else {
            return Err(DecodeError::Truncated {
                expected: total,
                found: out.len(),
            });
        };
        let value = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| DecodeError::InvalidSample(String::from_utf8_lossy(tok).into_owned()))?;
        if value > maxval as u64 {
            return Err(DecodeError::SampleOutOfRange { value, maxval });
        }
        out.push(value as u16);
    }
    Ok(out)
}

fn decode_ascii_bitmap(
    cur: &mut Cursor<'_>,
    total: usize,
) -> std::result::Result<Vec<u16>, DecodeError> {
    // P1 samples need not be whitespace separated.
    let mut out = Vec::with_capacity(total.min(cur.bytes.len()));
    while out.len() < total {
        cur.skip_ws_and_comments();
        match cur.bytes.get(cur.pos) {
            Some(b'0') => out.push(0),
            Some(b'1') => out.push(1),
            Some(&b) => return Err(DecodeError::InvalidSample((b as char).to_string())),
            None => {
                return Err(DecodeError::Truncated {
                    expected: total,
                    found: out.len(),
                })
            }
        }
        cur.pos += 1;
    }
    Ok(out)
}

fn decode_binary_gray(
    payload: &[u8],
    total: usize,
    maxval: u16,
) -> std::result::Result<Vec<u16>, DecodeError> {
    let wide = maxval > 255;
    let bytes_per = if wide { 2 } else { 1 };
    let found = payload.len() / bytes_per;
    if found < total {
        return Err(DecodeError::Truncated {
            expected: total,
            found,
        });
    }
    let samples: Vec<u16> = if wide {
        payload[..total * 2]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    } else {
        payload[..total].iter().map(|&b| b as u16).collect()
    };
    if let Some(&value) = samples.iter().find(|&&v| v > maxval) {
        return Err(DecodeError::SampleOutOfRange {
            value: value as u64,
            maxval,
        });
    }
    Ok(samples)
}

fn decode_binary_bitmap(
    payload: &[u8],
    width: usize,
    height: usize,
) -> std::result::Result<Vec<u16>, DecodeError> {
    let stride = width.div_ceil(8);
    let needed = stride * height;
    if payload.len() < needed {
        // report in samples: full rows that made it
        return Err(DecodeError::Truncated {
            expected: width * height,
            found: (payload.len() / stride.max(1)) * width,
        });
    }
    let mut out = Vec::with_capacity(width * height);
    for row in payload[..needed].chunks_exact(stride) {
        for c in 0..width {
            let bit = (row[c / 8] >> (7 - (c % 8))) & 1;
            out.push(bit as u16);
        }
    }
    Ok(out)
}

/// Decodes a P2 or P5 graymap.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let d = decode(bytes, false)?;
    let depth = if d.maxval <= 255 { 8 } else { 16 };
    GrayImage::new(d.width, d.height, depth, d.samples)
}

/// Encodes `image` as P2 (`ascii`) or P5 with maxval `2^depth - 1`.
///
/// 16-bit P5 samples are big-endian.
pub fn write_pgm(image: &GrayImage, ascii: bool) -> Vec<u8> {
    let maxval = image.max_value();
    let magic = if ascii { "P2" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", image.width, image.height).into_bytes();
    if ascii {
        for row in image.pixels.chunks(image.width) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    } else if maxval > 255 {
        out.reserve(image.pixels.len() * 2);
        for &v in &image.pixels {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(image.pixels.iter().map(|&v| v as u8));
    }
    out
}

/// Decodes a mask from any PGM or PBM; nonzero samples are foreground.
pub fn read_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let d = decode(bytes, true)?;
    BinaryMask::new(
        d.width,
        d.height,
        d.samples.iter().map(|&v| v != 0).collect(),
    )
}

/// Writes a mask as an 8-bit P5 graymap (0 / 255).
pub fn write_mask_pgm(mask: &BinaryMask) -> Result<Vec<u8>> {
    Ok(write_pgm(&mask.to_image()?, false))
}
