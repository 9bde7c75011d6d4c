use thiserror::Error;

use crate::imageio::DecodeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Decode(#[from] DecodeError),

    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("region has no foreground pixels")]
    EmptyRegion,

    #[error("breast extent {max_width}x{max_height} is too small for an ROI (need width >= 3, height >= 4)")]
    DegenerateRoi { max_width: usize, max_height: usize },

    #[error("box rows {row0}..{row1}, cols {col0}..{col1} does not fit a {width}x{height} image")]
    BoxOutOfBounds {
        row0: usize,
        row1: usize,
        col0: usize,
        col1: usize,
        width: usize,
        height: usize,
    },

    #[error("kernel size {0} must be odd and at least 3")]
    InvalidKernelSize(usize),

    #[error("kernel {kernel_w}x{kernel_h} does not fit a {width}x{height} raster")]
    KernelTooLarge {
        kernel_w: usize,
        kernel_h: usize,
        width: usize,
        height: usize,
    },

    #[error("image {width}x{height} is too small (shorter side must be >= {min})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense mask is not contained in the breast mask")]
    NotSubset,
}

impl Error {
    pub(crate) fn mismatch(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            left_w: left.0,
            left_h: left.1,
            right_w: right.0,
            right_h: right.1,
        }
    }
}
