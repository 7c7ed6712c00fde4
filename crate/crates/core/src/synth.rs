//! Synthetic lesion-like images with controllable topology.
//!
//! Three archetypes are drawn on a brighter background as axis-aligned dark
//! ellipses:
//!
//! - cyst-like: homogeneous interior;
//! - hemangioma-like: dark center with 2 to 4 bright blobs near the rim;
//! - metastasis-like: a "cluster of grapes" of mid-intensity spots around
//!   the center.
//!
//! Tissue levels and feature contrast are drawn per image from overlapping
//! ranges, so the classes differ mainly in where their bright structure sits
//! relative to the lesion boundary rather than in how bright it is.
//!
//! All randomness comes from a seeded ChaCha stream consumed in a fixed
//! order, and the noise is built from integer draws (an Irwin–Hall sum of
//! twelve uniforms), so a spec always produces the same bytes. No
//! transcendental functions are evaluated.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imageio::{write_manifest, write_pgm, GrayImage, LabeledDataset, LesionMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LesionClass {
    Cystlike,
    Hemangiomalike,
    Metastasislike,
}

impl LesionClass {
    pub const ALL: [LesionClass; 3] = [
        LesionClass::Cystlike,
        LesionClass::Hemangiomalike,
        LesionClass::Metastasislike,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LesionClass::Cystlike => "cystlike",
            LesionClass::Hemangiomalike => "hemangiomalike",
            LesionClass::Metastasislike => "metastasislike",
        }
    }
}

impl fmt::Display for LesionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LesionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LesionClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Synth(format!("unknown class {s:?}")))
    }
}

/// Smallest lesion diameter an archetype can be drawn at.
pub const MIN_DIAMETER: usize = 8;

/// Intensity ranges on the `[0, 1]` drawing scale. Background and features
/// are offsets above the lesion level.
const LESION: (f64, f64) = (0.2, 0.35);
const BACKGROUND_GAIN: (f64, f64) = (0.3, 0.45);
const BLOB_GAIN: (f64, f64) = (0.25, 0.45);
const SPECKLE_GAIN: (f64, f64) = (0.2, 0.4);
/// Metastasis-like spots: count range and squared normalized radius they are
/// confined to.
const SPOTS: (usize, usize) = (3, 6);
const SPOT_RHO2: f64 = 0.3;
/// Pixels of padding beyond the 5-pixel tissue ring on every side.
const MARGIN: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub class: LesionClass,
    /// Inclusive range of lesion diameters, in pixels.
    pub min_diameter: usize,
    pub max_diameter: usize,
    /// Standard deviation of the additive noise on the `[0, 1]` scale.
    pub noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(class: LesionClass, seed: u64) -> Self {
        Self {
            class,
            min_diameter: 14,
            max_diameter: 24,
            noise: 0.1,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.min_diameter < MIN_DIAMETER {
            return Err(Error::Synth(format!(
                "diameter {} is below the minimum of {MIN_DIAMETER} pixels",
                self.min_diameter
            )));
        }
        if self.max_diameter < self.min_diameter {
            return Err(Error::Synth("empty diameter range".into()));
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(Error::Synth(format!(
                "noise {} outside [0, 0.5]",
                self.noise
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    /// 8-bit intensities (0..=255).
    pub image: GrayImage,
    pub mask: LesionMask,
    pub label: String,
    /// Blob centers `(row, col)` for hemangioma-like samples.
    pub blob_centers: Vec<(f64, f64)>,
}

/// Unit directions at multiples of 22.5 degrees.
const DIRECTIONS: [(f64, f64); 16] = [
    (1.0, 0.0),
    (0.923_879_532_511_286_7, 0.382_683_432_365_089_8),
    (0.707_106_781_186_547_5, 0.707_106_781_186_547_5),
    (0.382_683_432_365_089_8, 0.923_879_532_511_286_7),
    (0.0, 1.0),
    (-0.382_683_432_365_089_8, 0.923_879_532_511_286_7),
    (-0.707_106_781_186_547_5, 0.707_106_781_186_547_5),
    (-0.923_879_532_511_286_7, 0.382_683_432_365_089_8),
    (-1.0, 0.0),
    (-0.923_879_532_511_286_7, -0.382_683_432_365_089_8),
    (-0.707_106_781_186_547_5, -0.707_106_781_186_547_5),
    (-0.382_683_432_365_089_8, -0.923_879_532_511_286_7),
    (0.0, -1.0),
    (0.382_683_432_365_089_8, -0.923_879_532_511_286_7),
    (0.707_106_781_186_547_5, -0.707_106_781_186_547_5),
    (0.923_879_532_511_286_7, -0.382_683_432_365_089_8),
];

/// Uniform in `[0, 1)` from 53 random bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// Approximately standard normal: sum of twelve uniforms minus six.
fn approx_normal(rng: &mut ChaCha8Rng) -> f64 {
    let mut s = 0.0;
    for _ in 0..12 {
        s += unit(rng);
    }
    s - 6.0
}

struct Ellipse {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
}

impl Ellipse {
    /// Squared normalized radius; inside iff <= 1.
    fn rho2(&self, r: f64, c: f64) -> f64 {
        let dy = (r - self.cy) / self.ry;
        let dx = (c - self.cx) / self.rx;
        dy * dy + dx * dx
    }
}

/// Draws one sample.
pub fn generate(spec: &SynthSpec) -> Result<SynthSample> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let span = spec.max_diameter - spec.min_diameter;
    let dy = spec.min_diameter + rng.random_range(0..=span);
    let dx = spec.min_diameter + rng.random_range(0..=span);
    let height = dy + 2 * (crate::DEFAULT_BORDER_WIDTH + MARGIN);
    let width = dx + 2 * (crate::DEFAULT_BORDER_WIDTH + MARGIN);
    let shape = Ellipse {
        cy: (height as f64 - 1.0) / 2.0,
        cx: (width as f64 - 1.0) / 2.0,
        ry: dy as f64 / 2.0,
        rx: dx as f64 / 2.0,
    };

    let lesion = draw(&mut rng, LESION);
    let background = lesion + draw(&mut rng, BACKGROUND_GAIN);
    let mut canvas = vec![background; width * height];
    let mut inside = vec![false; width * height];
    for r in 0..height {
        for c in 0..width {
            if shape.rho2(r as f64, c as f64) <= 1.0 {
                inside[r * width + c] = true;
                canvas[r * width + c] = lesion;
            }
        }
    }

    let mut blob_centers = Vec::new();
    match spec.class {
        LesionClass::Cystlike => {}
        LesionClass::Hemangiomalike => {
            let level = lesion + draw(&mut rng, BLOB_GAIN);
            let count = 2 + rng.random_range(0..3usize);
            let start = rng.random_range(0..DIRECTIONS.len());
            let step = DIRECTIONS.len() / count;
            let blob_r = (0.22 * shape.ry.min(shape.rx)).max(1.5);
            for k in 0..count {
                let (uy, ux) = DIRECTIONS[(start + k * step) % DIRECTIONS.len()];
                let frac = 0.6 + 0.15 * unit(&mut rng);
                let by = shape.cy + uy * shape.ry * frac;
                let bx = shape.cx + ux * shape.rx * frac;
                blob_centers.push((by, bx));
                paint_disc(&mut canvas, &inside, width, by, bx, blob_r, level);
            }
        }
        LesionClass::Metastasislike => {
            let level = lesion + draw(&mut rng, SPECKLE_GAIN);
            let spots = SPOTS.0 + rng.random_range(0..=SPOTS.1 - SPOTS.0);
            for _ in 0..spots {
                // rejection-sample a point near the center
                let (sy, sx) = loop {
                    let y = shape.cy + (2.0 * unit(&mut rng) - 1.0) * shape.ry;
                    let x = shape.cx + (2.0 * unit(&mut rng) - 1.0) * shape.rx;
                    if shape.rho2(y, x) <= SPOT_RHO2 {
                        break (y, x);
                    }
                };
                let radius = 0.8 + 0.6 * unit(&mut rng);
                paint_disc(&mut canvas, &inside, width, sy, sx, radius, level);
            }
        }
    }

    let values: Vec<f64> = canvas
        .iter()
        .map(|&v| {
            let noisy = if spec.noise > 0.0 {
                v + spec.noise * approx_normal(&mut rng)
            } else {
                v
            };
            (noisy.clamp(0.0, 1.0) * 255.0).round()
        })
        .collect();

    Ok(SynthSample {
        image: GrayImage::new(width, height, values)?,
        mask: LesionMask::new(width, height, inside)?,
        label: spec.class.label().to_string(),
        blob_centers,
    })
}

fn paint_disc(
    canvas: &mut [f64],
    inside: &[bool],
    width: usize,
    cy: f64,
    cx: f64,
    radius: f64,
    value: f64,
) {
    let height = canvas.len() / width;
    let r2 = radius * radius;
    let r0 = (cy - radius).floor().max(0.0) as usize;
    let r1 = ((cy + radius).ceil() as usize).min(height - 1);
    let c0 = (cx - radius).floor().max(0.0) as usize;
    let c1 = ((cx + radius).ceil() as usize).min(width - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let (dy, dx) = (r as f64 - cy, c as f64 - cx);
            let interior = crate::imageio::neighbors8(r, c, height, width)
                .into_iter()
                .all(|(nr, nc)| inside[nr * width + nc]);
            if dy * dy + dx * dx <= r2 && inside[r * width + c] && interior {
                canvas[r * width + c] = value;
            }
        }
    }
}

/// Options for [`generate_dataset`].
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n_per_class: usize,
    pub seed: u64,
    pub noise: f64,
    pub min_diameter: usize,
    pub max_diameter: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n_per_class: 20,
            seed: 0,
            noise: 0.1,
            min_diameter: 14,
            max_diameter: 24,
        }
    }
}

/// Seed of image `index` in a dataset: the dataset seed, spread by a
/// multiplicative hash so that nearby dataset seeds give unrelated images,
/// XOR the index.
pub fn image_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ index
}

/// Writes `images/NNNN.pgm`, `masks/NNNN.pgm`, and `manifest.csv` under
/// `out_dir`, class by class. Image `i` is drawn with [`image_seed`].
pub fn generate_dataset(out_dir: impl AsRef<Path>, spec: &DatasetSpec) -> Result<LabeledDataset> {
    if spec.n_per_class == 0 {
        return Err(Error::Synth("need at least one image per class".into()));
    }
    let out = out_dir.as_ref();
    for sub in ["images", "masks"] {
        fs::create_dir_all(out.join(sub)).map_err(|e| Error::io(out.join(sub), e))?;
    }
    let mut rows = Vec::new();
    let mut index = 0u64;
    for class in LesionClass::ALL {
        for _ in 0..spec.n_per_class {
            let s = generate(&SynthSpec {
                class,
                min_diameter: spec.min_diameter,
                max_diameter: spec.max_diameter,
                noise: spec.noise,
                seed: image_seed(spec.seed, index),
            })?;
            let img = format!("images/{index:04}.pgm");
            let mask = format!("masks/{index:04}.pgm");
            write_pgm(out.join(&img), &s.image, 255)?;
            let mask_img = GrayImage::new(
                s.mask.width(),
                s.mask.height(),
                s.mask.inside().iter().map(|&b| if b { 255.0 } else { 0.0 }).collect(),
            )?;
            write_pgm(out.join(&mask), &mask_img, 255)?;
            rows.push((img, mask, s.label));
            index += 1;
        }
    }
    let manifest = out.join("manifest.csv");
    write_manifest(&manifest, &rows)?;
    crate::imageio::load_manifest(&manifest)
}
