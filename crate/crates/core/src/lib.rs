//! Dense-tissue segmentation for digitized mammograms.
//!
//! The pipeline masks out background and pectoral muscle, orients every
//! breast toward the left edge, crops the fibroglandular-disc region,
//! enhances it with CLAHE, subtracts the superimposed response of an
//! oriented Gabor filter bank to suppress vessels and fibrous strands, and
//! fuses two intensity thresholds with a logical AND before binary
//! morphology cleans the result.
//!
//! ```text
//! image + mask ─ apply_mask ─ orient_left ─ roi_box/crop
//!     ─ clahe ─ bank_response ─ suppress_vessels
//!     ─ threshold(low) AND threshold(high) ─ open ─ close ─ dense mask
//! ```
//!
//! With the default `parallel` feature the inner loops (convolution rows,
//! filter orientations, CLAHE tiles, morphology rows) run on rayon. Every
//! parallel stage writes disjoint outputs in a fixed order, so results are
//! bit-identical for any thread count and with the feature disabled.

pub mod clahe;
pub mod convolve;
mod error;
pub mod gabor;
pub mod imageio;
pub mod metrics;
pub mod par;
pub mod preprocess;
pub mod segment;

pub use clahe::{clahe, clip_histogram, ClaheConfig};
pub use convolve::{convolve2d, rescale_to_depth, Border, FloatRaster, Kernel2d};
pub use error::{Error, Result};
pub use gabor::{
    bank_response, kernel_size_for, make_bank, make_kernel, suppress_vessels, FilterBank,
    GaborKernel, GaborParams, Superposition,
};
pub use imageio::{
    read_mask, read_pgm, write_mask_pgm, write_pgm, BinaryMask, DecodeError, GrayImage,
};
pub use metrics::{categorize, density_percent, CategoryEdges, DensityReport};
pub use preprocess::{
    apply_mask, breast_extent, crop, crop_mask, orient_left, paste_mask, roi_box, BreastExtent,
    RoiBox,
};
pub use segment::{
    and_masks, morph_close, morph_open, segment_dense, segment_stages, threshold, Reference,
    SegmentConfig, SegmentStages,
};
