//! Sliced two-parameter filtrations: the border-distance filtration is cut
//! into equally spaced sublevel slices and each slice is filtered by
//! intensity, in both directions for both functions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::RoiImage;
use crate::mesh::{filter_complex, Complex, Direction, FilteredComplex};
use crate::persistence::{compute_barcodes_capped, Barcode, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PanelMode {
    /// Intensity filtration on the full region only.
    #[serde(rename = "1d")]
    OneD,
    /// Intensity filtrations on every border-distance slice.
    #[serde(rename = "2d")]
    TwoD,
}

impl fmt::Display for PanelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PanelMode::OneD => "1d",
            PanelMode::TwoD => "2d",
        })
    }
}

impl FromStr for PanelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(PanelMode::OneD),
            "2d" => Ok(PanelMode::TwoD),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Identifies one barcode of a panel.
///
/// String form: `s{slice}_{b|B}{i|I}_d{dim}` for sliced barcodes and
/// `{i|I}_d{dim}` for intensity-only ones; lowercase marks the increasing
/// direction, uppercase the decreasing one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PanelKey {
    Slice {
        slice: u16,
        border: Direction,
        intensity: Direction,
        dim: u8,
    },
    Intensity {
        intensity: Direction,
        dim: u8,
    },
}

impl PanelKey {
    pub fn dim(&self) -> u8 {
        match *self {
            PanelKey::Slice { dim, .. } | PanelKey::Intensity { dim, .. } => dim,
        }
    }

    pub fn mode(&self) -> PanelMode {
        match self {
            PanelKey::Slice { .. } => PanelMode::TwoD,
            PanelKey::Intensity { .. } => PanelMode::OneD,
        }
    }

    /// All keys of a panel, in canonical order. `slices` is ignored in 1d
    /// mode.
    pub fn all(mode: PanelMode, slices: usize) -> Vec<PanelKey> {
        let mut keys = Vec::new();
        match mode {
            PanelMode::TwoD => {
                for slice in 1..=slices as u16 {
                    for border in Direction::BOTH {
                        for intensity in Direction::BOTH {
                            for dim in 0..2 {
                                keys.push(PanelKey::Slice {
                                    slice,
                                    border,
                                    intensity,
                                    dim,
                                });
                            }
                        }
                    }
                }
            }
            PanelMode::OneD => {
                for intensity in Direction::BOTH {
                    for dim in 0..2 {
                        keys.push(PanelKey::Intensity { intensity, dim });
                    }
                }
            }
        }
        keys
    }
}

fn dir_char(d: Direction, lower: char) -> char {
    match d {
        Direction::Increasing => lower,
        Direction::Decreasing => lower.to_ascii_uppercase(),
    }
}

fn char_dir(c: char, lower: char) -> Option<Direction> {
    if c == lower {
        Some(Direction::Increasing)
    } else if c == lower.to_ascii_uppercase() {
        Some(Direction::Decreasing)
    } else {
        None
    }
}

impl fmt::Display for PanelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PanelKey::Slice {
                slice,
                border,
                intensity,
                dim,
            } => write!(
                f,
                "s{slice}_{}{}_d{dim}",
                dir_char(border, 'b'),
                dir_char(intensity, 'i')
            ),
            PanelKey::Intensity { intensity, dim } => {
                write!(f, "{}_d{dim}", dir_char(intensity, 'i'))
            }
        }
    }
}

impl FromStr for PanelKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::KeyMismatch(format!("malformed panel key {s:?}"));
        let (head, dim) = s.rsplit_once("_d").ok_or_else(bad)?;
        let dim: u8 = dim.parse().map_err(|_| bad())?;
        if dim > 1 {
            return Err(bad());
        }
        if let Some(rest) = head.strip_prefix('s') {
            let (slice, dirs) = rest.split_once('_').ok_or_else(bad)?;
            let slice: u16 = slice.parse().map_err(|_| bad())?;
            let mut chars = dirs.chars();
            let (b, i) = (chars.next(), chars.next());
            if slice == 0 || chars.next().is_some() {
                return Err(bad());
            }
            Ok(PanelKey::Slice {
                slice,
                border: b.and_then(|c| char_dir(c, 'b')).ok_or_else(bad)?,
                intensity: i.and_then(|c| char_dir(c, 'i')).ok_or_else(bad)?,
                dim,
            })
        } else {
            let mut chars = head.chars();
            let i = chars.next().and_then(|c| char_dir(c, 'i')).ok_or_else(bad)?;
            if chars.next().is_some() {
                return Err(bad());
            }
            Ok(PanelKey::Intensity { intensity: i, dim })
        }
    }
}

/// All barcodes computed on one image.
#[derive(Clone, Debug, PartialEq)]
pub struct BarcodePanel {
    pub id: String,
    mode: PanelMode,
    slices: usize,
    barcodes: BTreeMap<PanelKey, Barcode>,
}

impl BarcodePanel {
    /// Assembles a panel and checks that exactly the keys of `mode` with
    /// `slices` slices are present.
    pub fn new(
        id: impl Into<String>,
        mode: PanelMode,
        slices: usize,
        barcodes: BTreeMap<PanelKey, Barcode>,
    ) -> Result<Self> {
        let slices = if mode == PanelMode::OneD { 0 } else { slices };
        let expected = PanelKey::all(mode, slices);
        if barcodes.len() != expected.len() || !expected.iter().all(|k| barcodes.contains_key(k))
        {
            return Err(Error::KeyMismatch(format!(
                "panel has {} barcodes, expected the {} keys of a {mode} panel with {slices} slices",
                barcodes.len(),
                expected.len()
            )));
        }
        if let Some((k, b)) = barcodes.iter().find(|(k, b)| k.dim() != b.dim) {
            return Err(Error::KeyMismatch(format!(
                "barcode under {k} has dimension {}",
                b.dim
            )));
        }
        Ok(Self {
            id: id.into(),
            mode,
            slices,
            barcodes,
        })
    }

    pub fn mode(&self) -> PanelMode {
        self.mode
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn len(&self) -> usize {
        self.barcodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.barcodes.is_empty()
    }

    pub fn get(&self, key: &PanelKey) -> Option<&Barcode> {
        self.barcodes.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PanelKey, &Barcode)> {
        self.barcodes.iter()
    }

    /// Whether both panels have the same mode and key set.
    pub fn same_layout(&self, other: &BarcodePanel) -> bool {
        self.mode == other.mode && self.slices == other.slices
    }

    /// Flat JSON object mapping each key string to its `[[birth, death], ...]`
    /// interval array.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, &[Interval]> = self
            .barcodes
            .iter()
            .map(|(k, b)| (k.to_string(), b.intervals()))
            .collect();
        serde_json::to_string_pretty(&map).expect("panel serializes")
    }

    /// Parses [`Self::to_json`] output. Mode and slice count are inferred
    /// from the keys.
    pub fn from_json(id: impl Into<String>, text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<Interval>> = serde_json::from_str(text)?;
        let mut barcodes = BTreeMap::new();
        for (k, intervals) in raw {
            let key: PanelKey = k.parse()?;
            barcodes.insert(key, Barcode::new(key.dim(), intervals));
        }
        let mode = match barcodes.keys().next() {
            Some(k) => k.mode(),
            None => return Err(Error::KeyMismatch("panel has no barcodes".into())),
        };
        if barcodes.keys().any(|k| k.mode() != mode) {
            return Err(Error::KeyMismatch("panel mixes 1d and 2d keys".into()));
        }
        let slices = barcodes
            .keys()
            .map(|k| match k {
                PanelKey::Slice { slice, .. } => *slice as usize,
                PanelKey::Intensity { .. } => 0,
            })
            .max()
            .unwrap_or(0);
        Self::new(id, mode, slices, barcodes)
    }
}

/// Border-distance thresholds `i / n` for `i = 1..=n`; the last is exactly 1.
pub fn slice_thresholds(n_slices: usize) -> Result<Vec<f64>> {
    if n_slices == 0 || n_slices > u16::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "slice count must be in 1..={}, got {n_slices}",
            u16::MAX
        )));
    }
    Ok((1..=n_slices)
        .map(|i| i as f64 / n_slices as f64)
        .collect())
}

/// The slice of `filtered` at border threshold `t`: an increasing border
/// slice keeps pixels with border distance at most `t`, a decreasing one
/// keeps those with border distance at least `1 - t`.
pub fn slice_subcomplex(
    roi: &RoiImage,
    filtered: &FilteredComplex,
    t: f64,
    border: Direction,
) -> FilteredComplex {
    let bd = roi.border_dist();
    match border {
        Direction::Increasing => filtered.restrict(|v| bd[v as usize] <= t),
        Direction::Decreasing => {
            let lo = 1.0 - t;
            filtered.restrict(|v| bd[v as usize] >= lo)
        }
    }
}

fn intensity_filtrations(roi: &RoiImage) -> Result<[FilteredComplex; 2]> {
    let complex = Complex::from_roi(roi);
    Ok([
        filter_complex(&complex, roi.intensity(), Direction::Increasing)?,
        filter_complex(&complex, roi.intensity(), Direction::Decreasing)?,
    ])
}

/// Computes the `8 * n_slices` barcode panel of a region.
pub fn compute_panel(roi: &RoiImage, n_slices: usize, cap: f64) -> Result<BarcodePanel> {
    let thresholds = slice_thresholds(n_slices)?;
    let filtered = intensity_filtrations(roi)?;
    let mut jobs = Vec::with_capacity(4 * n_slices);
    for s in 0..n_slices {
        for border in Direction::BOTH {
            for di in 0..2 {
                jobs.push((s, border, di));
            }
        }
    }
    let results: Vec<Result<Vec<(PanelKey, Barcode)>>> = jobs
        .par_iter()
        .map(|&(s, border, di)| {
            let intensity = Direction::BOTH[di];
            let sub = slice_subcomplex(roi, &filtered[di], thresholds[s], border);
            let (b0, b1) = compute_barcodes_capped(&sub, cap)?;
            let slice = (s + 1) as u16;
            Ok([b0, b1]
                .into_iter()
                .map(|b| {
                    let key = PanelKey::Slice {
                        slice,
                        border,
                        intensity,
                        dim: b.dim,
                    };
                    (key, b)
                })
                .collect())
        })
        .collect();
    let mut barcodes = BTreeMap::new();
    for r in results {
        barcodes.extend(r?);
    }
    BarcodePanel::new(roi.provenance(), PanelMode::TwoD, n_slices, barcodes)
}

/// The intensity-only baseline: the full region filtered by intensity in both
/// directions, dimensions 0 and 1.
pub fn compute_intensity_only(roi: &RoiImage, cap: f64) -> Result<BarcodePanel> {
    let filtered = intensity_filtrations(roi)?;
    let mut barcodes = BTreeMap::new();
    for (k, intensity) in filtered.iter().zip(Direction::BOTH) {
        let (b0, b1) = compute_barcodes_capped(k, cap)?;
        for b in [b0, b1] {
            barcodes.insert(PanelKey::Intensity { intensity, dim: b.dim }, b);
        }
    }
    BarcodePanel::new(roi.provenance(), PanelMode::OneD, 0, barcodes)
}

/// Dispatches on `mode`.
pub fn compute(roi: &RoiImage, mode: PanelMode, n_slices: usize, cap: f64) -> Result<BarcodePanel> {
    match mode {
        PanelMode::TwoD => compute_panel(roi, n_slices, cap),
        PanelMode::OneD => compute_intensity_only(roi, cap),
    }
}
