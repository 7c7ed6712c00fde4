//! Topological barcode features for masked grayscale images.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`imageio`] loads an image and its lesion mask and extracts a region of
//!    interest (the mask plus a ring of surrounding tissue) together with
//!    normalized intensity and border-distance functions.
//! 2. [`mesh`] builds the 8-adjacency simplicial complex on the region and
//!    attaches sublevel entry values to every simplex.
//! 3. [`persistence`] reduces the boundary matrix over the two-element field
//!    and reports dimension 0 and 1 barcodes.
//! 4. [`bifiltration`] slices the border-distance filtration and runs the
//!    intensity filtration on every slice, giving a [`BarcodePanel`].
//! 5. [`matching`] compares barcodes with the optimal partial-matching metric
//!    and [`learn`] turns the summed panel distances into feature vectors for
//!    an RBF-kernel SVM, classical MDS, and leave-one-out validation.
//!
//! [`synth`] produces labeled synthetic images with controllable topology.

pub mod bifiltration;
pub mod error;
pub mod imageio;
pub mod learn;
pub mod matching;
pub mod mesh;
pub mod persistence;
pub mod synth;
mod unionfind;

pub use bifiltration::{BarcodePanel, PanelKey, PanelMode};
pub use error::{Error, Result};
pub use imageio::{GrayImage, LabeledDataset, LesionMask, RoiImage};
pub use mesh::{Complex, Direction, FilteredComplex, Simplex};
pub use persistence::{Barcode, Interval};

/// Width of the healthy-tissue ring kept around the lesion, in pixels.
pub const DEFAULT_BORDER_WIDTH: usize = 5;
/// Number of border-distance slices.
pub const DEFAULT_SLICES: usize = 20;
/// Death value assigned to bars that never die.
pub const DEFAULT_CAP: f64 = 1.1;
