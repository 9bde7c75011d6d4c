//! Density quantification and CSV reporting.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::BinaryMask;
use crate::segment::Reference;

/// One CSV row: `image_id,breast_px,dense_px,percent_dense,category,threshold_reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub image_id: String,
    pub breast_px: u64,
    pub dense_px: u64,
    pub percent_dense: f64,
    pub category: u8,
    pub threshold_reference: Reference,
}

impl DensityReport {
    pub fn from_masks(
        image_id: impl Into<String>,
        dense: &BinaryMask,
        breast: &BinaryMask,
        reference: Reference,
        edges: &CategoryEdges,
    ) -> Result<Self> {
        let percent_dense = density_percent(dense, breast)?;
        Ok(Self {
            image_id: image_id.into(),
            breast_px: breast.count() as u64,
            dense_px: dense.count() as u64,
            percent_dense,
            category: edges.categorize(percent_dense)?,
            threshold_reference: reference,
        })
    }
}

/// `|dense| / |breast|`; `dense` must lie inside `breast`.
pub fn density_percent(dense: &BinaryMask, breast: &BinaryMask) -> Result<f64> {
    if dense.dims() != breast.dims() {
        return Err(Error::mismatch(dense.dims(), breast.dims()));
    }
    let total = breast.count();
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    if !dense.is_subset_of(breast) {
        return Err(Error::NotSubset);
    }
    Ok(dense.count() as f64 / total as f64)
}

/// Right-open bin edges splitting `[0, 1]` into categories 1..=4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryEdges(pub [f64; 3]);

impl Default for CategoryEdges {
    fn default() -> Self {
        Self([0.25, 0.50, 0.75])
    }
}

impl CategoryEdges {
    pub fn new(edges: [f64; 3]) -> Result<Self> {
        let [a, b, c] = edges;
        if !(0.0 < a && a <= b && b <= c && c < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "category edges must be increasing inside (0, 1), got {edges:?}"
            )));
        }
        Ok(Self(edges))
    }

    pub fn categorize(&self, percent: f64) -> Result<u8> {
        if !(0.0..=1.0).contains(&percent) {
            return Err(Error::InvalidParameter(format!(
                "density fraction must be in [0, 1], got {percent}"
            )));
        }
        Ok(1 + self.0.iter().filter(|&&e| percent >= e).count() as u8)
    }
}

/// Category 1..=4 with quartile edges.
pub fn categorize(percent: f64) -> Result<u8> {
    CategoryEdges::default().categorize(percent)
}

pub fn write_csv<W: io::Write>(out: W, rows: &[DensityReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "image_id",
            "breast_px",
            "dense_px",
            "percent_dense",
            "category",
            "threshold_reference",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<DensityReport>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
