//! Image, mask, and manifest loading plus region-of-interest extraction.

mod format;
mod manifest;
mod roi;

pub use format::{load_image, parse_image, write_csv, write_pgm};
pub use manifest::{load_manifest, read_manifest, write_manifest, DatasetEntry, LabeledDataset};
pub use roi::{euclidean_distance_transform, extract_roi, RoiImage};

use std::path::Path;

use crate::error::{Error, Result};

/// A row-major grid of raw, nonnegative intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} image needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pixel values must be finite and nonnegative, got {v}"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
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

/// Lesion pixels of an image. Always non-empty and a single 8-connected
/// component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LesionMask {
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl LesionMask {
    pub fn new(width: usize, height: usize, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != width * height {
            return Err(Error::InvalidMask(format!(
                "{width}x{height} mask needs {} cells, got {}",
                width * height,
                inside.len()
            )));
        }
        let mask = Self {
            width,
            height,
            inside,
        };
        let count = mask.inside.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::InvalidMask("mask is empty".into()));
        }
        let components = mask.component_count();
        if components != 1 {
            return Err(Error::InvalidMask(format!(
                "mask has {components} 8-connected components, expected 1"
            )));
        }
        Ok(mask)
    }

    /// Nonzero pixels become lesion tissue.
    pub fn from_image(img: &GrayImage) -> Result<Self> {
        Self::new(
            img.width(),
            img.height(),
            img.values().iter().map(|&v| v != 0.0).collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_image(&load_image(path)?)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.inside[row * self.width + col]
    }

    /// Number of lesion pixels.
    pub fn area(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    fn component_count(&self) -> usize {
        let mut seen = vec![false; self.inside.len()];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..self.inside.len() {
            if !self.inside[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (r, c) = (idx / self.width, idx % self.width);
                for (nr, nc) in neighbors8(r, c, self.height, self.width) {
                    let n = nr * self.width + nc;
                    if self.inside[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
        }
        components
    }
}

/// In-bounds 8-neighbors of `(row, col)`.
pub(crate) fn neighbors8(
    row: usize,
    col: usize,
    height: usize,
    width: usize,
) -> impl Iterator<Item = (usize, usize)> {
    const OFFSETS: [(isize, isize); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    OFFSETS.iter().filter_map(move |&(dr, dc)| {
        let r = row as isize + dr;
        let c = col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width)
            .then_some((r as usize, c as usize))
    })
}
