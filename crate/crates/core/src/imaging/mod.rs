//! Ground-truth images, the measurement oracle and measurement bookkeeping.

mod dendrite;
mod pgm;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dendrite::{generate_dendrite, DendriteParams};
pub use pgm::{load_image, load_mask, save_image, save_mask};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported format: magic {0:?} (expected P2 or P5 grayscale)")]
    UnsupportedFormat(String),
    #[error("unsupported bit depth: maxval {0} exceeds 255")]
    UnsupportedDepth(u32),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("malformed pixel data: {0}")]
    MalformedData(String),
    #[error("mask pixel at {0} is {1}, expected 0 or 255")]
    InvalidMask(usize, u8),
    #[error("location ({row}, {col}) outside {width}x{height} image")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("pixel buffer has {got} values, expected {expected}")]
    BufferSize { got: usize, expected: usize },
    #[error("location ({0}, {1}) already measured")]
    AlreadyMeasured(usize, usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// Pixel position; `row` indexes height, `col` indexes width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Location {
    pub row: usize,
    pub col: usize,
}

impl Location {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Row-major linear index.
    pub fn index(self, width: usize) -> usize {
        self.row * width + self.col
    }

    pub fn from_index(index: usize, width: usize) -> Self {
        Self {
            row: index / width,
            col: index % width,
        }
    }

    /// `[row, col]` as floating point coordinates.
    pub fn point(self) -> [f64; 2] {
        [self.row as f64, self.col as f64]
    }
}

/// Dense 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        let expected = width * height;
        if data.len() != expected {
            return Err(ImagingError::BufferSize {
                got: data.len(),
                expected,
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, loc: Location) -> Option<u8> {
        self.contains(loc).then(|| self.data[loc.index(self.width)])
    }

    pub fn contains(&self, loc: Location) -> bool {
        loc.row < self.height && loc.col < self.width
    }

    pub fn same_shape(&self, other: &Image) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(ImagingError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// The point-wise oracle: reads the ground-truth intensity at `loc`.
pub fn measure(image: &Image, loc: Location) -> Result<u8> {
    image.get(loc).ok_or(ImagingError::OutOfBounds {
        row: loc.row,
        col: loc.col,
        width: image.width,
        height: image.height,
    })
}

/// Ordered measurement log with an O(1) membership mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSet {
    width: usize,
    height: usize,
    entries: Vec<(Location, u8)>,
    mask: Vec<bool>,
}

impl MeasurementSet {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            entries: Vec::new(),
            mask: vec![false; width * height],
        }
    }

    /// Empty set over the same domain as `image`.
    pub fn for_image(image: &Image) -> Self {
        Self::new(image.width, image.height)
    }

    /// Rebuilds a set from a mask image (nonzero = measured) and the truth
    /// values. Entries are ordered by linear index.
    pub fn from_mask(mask: &[bool], truth: &Image) -> Result<Self> {
        if mask.len() != truth.len() {
            return Err(ImagingError::BufferSize {
                got: mask.len(),
                expected: truth.len(),
            });
        }
        let mut set = Self::for_image(truth);
        for (idx, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let loc = Location::from_index(idx, truth.width);
            set.insert(loc, truth.data[idx])?;
        }
        Ok(set)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Measured fraction of the domain.
    pub fn ratio(&self) -> f64 {
        self.entries.len() as f64 / self.area() as f64
    }

    pub fn entries(&self) -> &[(Location, u8)] {
        &self.entries
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, loc: Location) -> bool {
        loc.row < self.height && loc.col < self.width && self.mask[loc.index(self.width)]
    }

    pub fn insert(&mut self, loc: Location, value: u8) -> Result<()> {
        if loc.row >= self.height || loc.col >= self.width {
            return Err(ImagingError::OutOfBounds {
                row: loc.row,
                col: loc.col,
                width: self.width,
                height: self.height,
            });
        }
        let idx = loc.index(self.width);
        if self.mask[idx] {
            return Err(ImagingError::AlreadyMeasured(loc.row, loc.col));
        }
        self.mask[idx] = true;
        self.entries.push((loc, value));
        Ok(())
    }

    /// Measures `loc` on `image` through the oracle and records it.
    pub fn measure_from(&mut self, image: &Image, loc: Location) -> Result<u8> {
        let value = measure(image, loc)?;
        self.insert(loc, value)?;
        Ok(value)
    }
}

/// Truth values at measured locations, 0 elsewhere.
pub fn sampled_image(truth: &Image, ms: &MeasurementSet) -> Result<Image> {
    if truth.width != ms.width || truth.height != ms.height {
        return Err(ImagingError::DimensionMismatch(
            truth.width,
            truth.height,
            ms.width,
            ms.height,
        ));
    }
    let data = truth
        .data
        .iter()
        .zip(&ms.mask)
        .map(|(&v, &m)| if m { v } else { 0 })
        .collect();
    Image::new(truth.width, truth.height, data)
}

/// Binary mask image: 255 at measured locations, 0 elsewhere.
pub fn mask_image(ms: &MeasurementSet) -> Image {
    let data = ms.mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    Image {
        width: ms.width,
        height: ms.height,
        data,
    }
}
