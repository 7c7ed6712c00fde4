//! Shared fixtures for the benchmarks.

use topobar::imageio::extract_roi;
use topobar::synth::{generate, LesionClass, SynthSpec};
use topobar::RoiImage;

/// Region of interest of a seeded synthetic lesion.
pub fn roi(class: LesionClass, seed: u64) -> RoiImage {
    let s = generate(&SynthSpec::new(class, seed)).expect("valid spec");
    extract_roi(&s.image, &s.mask, topobar::DEFAULT_BORDER_WIDTH).expect("valid mask")
}
