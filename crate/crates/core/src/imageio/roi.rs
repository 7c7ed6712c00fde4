use super::{neighbors8, GrayImage, LesionMask};
use crate::error::{Error, Result};

/// Region of interest: lesion pixels plus a ring of surrounding tissue, with
/// intensity and border distance both min-max normalized to `[0, 1]` over the
/// region. Per-pixel values are stored in row-major region order, which is
/// also the vertex numbering used by [`crate::mesh::Complex`].
#[derive(Clone, Debug, PartialEq)]
pub struct RoiImage {
    width: usize,
    height: usize,
    pixels: Vec<(usize, usize)>,
    in_lesion: Vec<bool>,
    intensity: Vec<f64>,
    border_dist: Vec<f64>,
    provenance: String,
}

impl RoiImage {
    /// Builds a region directly from per-pixel values. Values are used as
    /// given and must already lie in `[0, 1]`; pixels are sorted row-major.
    pub fn from_parts(
        width: usize,
        height: usize,
        pixels: Vec<(usize, usize)>,
        intensity: Vec<f64>,
        border_dist: Vec<f64>,
    ) -> Result<Self> {
        let n = pixels.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty region".into()));
        }
        if intensity.len() != n || border_dist.len() != n {
            return Err(Error::InvalidArgument(
                "per-pixel value count does not match pixel count".into(),
            ));
        }
        if pixels.iter().any(|&(r, c)| r >= height || c >= width) {
            return Err(Error::InvalidArgument("pixel outside image bounds".into()));
        }
        if pixels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "pixels must be unique and in row-major order".into(),
            ));
        }
        let unit = |v: &f64| (0.0..=1.0).contains(v);
        if !intensity.iter().all(unit) || !border_dist.iter().all(unit) {
            return Err(Error::InvalidArgument("values must lie in [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
            in_lesion: vec![true; n],
            intensity,
            border_dist,
            provenance: String::new(),
        })
    }

    pub fn with_provenance(mut self, id: impl Into<String>) -> Self {
        self.provenance = id.into();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn border_dist(&self) -> &[f64] {
        &self.border_dist
    }

    /// Whether each region pixel belongs to the lesion (as opposed to the
    /// surrounding ring).
    pub fn in_lesion(&self) -> &[bool] {
        &self.in_lesion
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Region index of a pixel, if it belongs to the region.
    pub fn index_of(&self, row: usize, col: usize) -> Option<usize> {
        self.pixels.binary_search(&(row, col)).ok()
    }
}

/// Extracts the lesion plus a Chebyshev ring of `border_width` pixels
/// (clipped to the image), and computes normalized intensity and normalized
/// Euclidean distance to the lesion outline.
///
/// Outline pixels are lesion pixels with at least one 8-neighbor outside the
/// lesion; pixels on the image edge count as outline.
pub fn extract_roi(img: &GrayImage, mask: &LesionMask, border_width: usize) -> Result<RoiImage> {
    let (w, h) = (img.width(), img.height());
    if mask.width() != w || mask.height() != h {
        return Err(Error::DimensionMismatch {
            image_w: w,
            image_h: h,
            mask_w: mask.width(),
            mask_h: mask.height(),
        });
    }
    if mask.area() == 0 {
        return Err(Error::InvalidMask("mask is empty".into()));
    }

    let region = chebyshev_dilate(mask.inside(), w, h, border_width);
    let outline: Vec<bool> = (0..w * h)
        .map(|i| {
            let (r, c) = (i / w, i % w);
            mask.inside()[i] && {
                let interior = r > 0
                    && c > 0
                    && r + 1 < h
                    && c + 1 < w
                    && neighbors8(r, c, h, w).all(|(nr, nc)| mask.contains(nr, nc));
                !interior
            }
        })
        .collect();
    let sq_dist = euclidean_distance_transform(&outline, w, h);

    let mut pixels = Vec::new();
    let mut in_lesion = Vec::new();
    let mut raw_intensity = Vec::new();
    let mut raw_dist = Vec::new();
    for (i, _) in region.iter().enumerate().filter(|(_, &keep)| keep) {
        pixels.push((i / w, i % w));
        in_lesion.push(mask.inside()[i]);
        raw_intensity.push(img.values()[i]);
        raw_dist.push(sq_dist[i].sqrt());
    }

    Ok(RoiImage {
        width: w,
        height: h,
        pixels,
        in_lesion,
        intensity: min_max_normalize(&raw_intensity),
        border_dist: min_max_normalize(&raw_dist),
        provenance: String::new(),
    })
}

/// Affinely maps the minimum to 0 and the maximum to 1. Constant input maps
/// to all zeros.
pub(crate) fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    // also catches empty input and NaN
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values
        .iter()
        .map(|&v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

fn chebyshev_dilate(inside: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    // separable: a pixel is within Chebyshev radius iff some row-window and
    // column-window both hit, i.e. a horizontal pass then a vertical pass
    let horizontal: Vec<bool> = (0..h)
        .flat_map(|r| {
            let row = &inside[r * w..(r + 1) * w];
            window_any(row, radius)
        })
        .collect();
    let mut out = vec![false; w * h];
    for c in 0..w {
        let col: Vec<bool> = (0..h).map(|r| horizontal[r * w + c]).collect();
        for (r, hit) in window_any(&col, radius).into_iter().enumerate() {
            out[r * w + c] = hit;
        }
    }
    out
}

fn window_any(line: &[bool], radius: usize) -> Vec<bool> {
    let mut prefix = vec![0usize; line.len() + 1];
    for (i, &b) in line.iter().enumerate() {
        prefix[i + 1] = prefix[i] + b as usize;
    }
    (0..line.len())
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(line.len());
            prefix[hi] > prefix[lo]
        })
        .collect()
}

/// Exact squared Euclidean distance from every pixel center to the nearest
/// seed pixel center (Felzenszwalb–Huttenlocher lower envelope, applied to
/// columns then rows). Without seeds every distance is infinite.
pub fn euclidean_distance_transform(seeds: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = seeds
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let mut buf = Vec::with_capacity(w.max(h));
    for c in 0..w {
        buf.clear();
        buf.extend((0..h).map(|r| grid[r * w + c]));
        let out = lower_envelope(&buf);
        for (r, v) in out.into_iter().enumerate() {
            grid[r * w + c] = v;
        }
    }
    for r in 0..h {
        let out = lower_envelope(&grid[r * w..(r + 1) * w]);
        grid[r * w..(r + 1) * w].copy_from_slice(&out);
    }
    grid
}

fn lower_envelope(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let finite: Vec<usize> = (0..n).filter(|&i| f[i].is_finite()).collect();
    if finite.is_empty() {
        return vec![f64::INFINITY; n];
    }
    let mut hull: Vec<usize> = Vec::with_capacity(finite.len());
    let mut starts: Vec<f64> = Vec::with_capacity(finite.len());
    let intersect = |p: usize, q: usize| -> f64 {
        let (pf, qf) = (p as f64, q as f64);
        ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf))
    };
    for &q in &finite {
        loop {
            match hull.last() {
                Some(&p) => {
                    let s = intersect(p, q);
                    if s <= *starts.last().unwrap() {
                        hull.pop();
                        starts.pop();
                    } else {
                        hull.push(q);
                        starts.push(s);
                        break;
                    }
                }
                None => {
                    hull.push(q);
                    starts.push(f64::NEG_INFINITY);
                    break;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for x in 0..n {
        let xf = x as f64;
        while k + 1 < hull.len() && starts[k + 1] < xf {
            k += 1;
        }
        let p = hull[k];
        let d = xf - p as f64;
        out.push(d * d + f[p]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_from(w: usize, h: usize, cells: &[(usize, usize)]) -> LesionMask {
        let mut inside = vec![false; w * h];
        for &(r, c) in cells {
            inside[r * w + c] = true;
        }
        LesionMask::new(w, h, inside).unwrap()
    }

    fn brute_sq_dist(seeds: &[bool], w: usize, h: usize) -> Vec<f64> {
        (0..w * h)
            .map(|i| {
                let (r, c) = ((i / w) as f64, (i % w) as f64);
                (0..w * h)
                    .filter(|&j| seeds[j])
                    .map(|j| {
                        let (sr, sc) = ((j / w) as f64, (j % w) as f64);
                        (r - sr).powi(2) + (c - sc).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_pixel_mask_gives_11x11_region() {
        let img = GrayImage::new(21, 21, (0..441).map(|v| v as f64).collect()).unwrap();
        let mask = mask_from(21, 21, &[(10, 10)]);
        let roi = extract_roi(&img, &mask, 5).unwrap();
        assert_eq!(roi.len(), 121);
        assert_eq!(roi.pixels()[0], (5, 5));
        assert_eq!(roi.pixels()[120], (15, 15));
        let center = roi.index_of(10, 10).unwrap();
        assert_eq!(roi.border_dist()[center], 0.0);
        // corners are at distance 5*sqrt(2), the maximum
        for corner in [(5, 5), (5, 15), (15, 5), (15, 15)] {
            assert_eq!(roi.border_dist()[roi.index_of(corner.0, corner.1).unwrap()], 1.0);
        }
        // exhaustive nearest-outline search on every pixel
        let max = 50f64.sqrt();
        for (k, &(r, c)) in roi.pixels().iter().enumerate() {
            let d = ((r as f64 - 10.0).powi(2) + (c as f64 - 10.0).powi(2)).sqrt();
            assert!((roi.border_dist()[k] - d / max).abs() < 1e-12);
        }
    }

    #[test]
    fn full_3x3_mask_without_ring() {
        let img = GrayImage::new(3, 3, vec![1.0; 9]).unwrap();
        let cells: Vec<_> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
        let mask = mask_from(3, 3, &cells);
        let roi = extract_roi(&img, &mask, 0).unwrap();
        assert_eq!(roi.len(), 9);
        for (k, &(r, c)) in roi.pixels().iter().enumerate() {
            let expect = if (r, c) == (1, 1) { 1.0 } else { 0.0 };
            assert_eq!(roi.border_dist()[k], expect);
        }
        // constant intensity collapses to zeros
        assert!(roi.intensity().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ring_is_clipped_to_image() {
        let img = GrayImage::new(4, 3, vec![0.0; 12]).unwrap();
        let mask = mask_from(4, 3, &[(0, 0)]);
        let roi = extract_roi(&img, &mask, 2).unwrap();
        assert_eq!(roi.len(), 9);
        assert!(roi.pixels().iter().all(|&(r, c)| r <= 2 && c <= 2));
    }

    #[test]
    fn intensity_is_normalized_over_region_only() {
        // the far-away 1000 lies outside the region and must not matter
        let mut vals = vec![10.0; 25];
        vals[0] = 1000.0;
        vals[12] = 20.0;
        let img = GrayImage::new(5, 5, vals).unwrap();
        let mask = mask_from(5, 5, &[(2, 2)]);
        let roi = extract_roi(&img, &mask, 1).unwrap();
        assert_eq!(roi.len(), 9);
        assert_eq!(roi.intensity()[roi.index_of(2, 2).unwrap()], 1.0);
        assert_eq!(roi.intensity()[roi.index_of(1, 1).unwrap()], 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let img = GrayImage::new(3, 3, vec![0.0; 9]).unwrap();
        let mask = mask_from(2, 2, &[(0, 0)]);
        assert!(matches!(
            extract_roi(&img, &mask, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn edt_without_seeds_is_infinite() {
        assert!(euclidean_distance_transform(&[false; 6], 3, 2)
            .iter()
            .all(|v| v.is_infinite()));
    }

    proptest! {
        #[test]
        fn edt_matches_exhaustive_search(
            w in 1usize..12,
            h in 1usize..12,
            bits in proptest::collection::vec(proptest::bool::weighted(0.15), 144),
        ) {
            let seeds = &bits[..w * h];
            let fast = euclidean_distance_transform(seeds, w, h);
            let slow = brute_sq_dist(seeds, w, h);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!(a == b || (a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }

        #[test]
        fn positive_affine_rescale_leaves_roi_unchanged(
            vals in proptest::collection::vec(0.0f64..100.0, 49),
            scale in 0.01f64..50.0,
            shift in 0.0f64..1000.0,
        ) {
            let mask = mask_from(7, 7, &[(3, 3), (3, 4), (4, 4)]);
            let a = GrayImage::new(7, 7, vals.clone()).unwrap();
            let b = GrayImage::new(7, 7, vals.iter().map(|v| v * scale + shift).collect()).unwrap();
            let ra = extract_roi(&a, &mask, 2).unwrap();
            let rb = extract_roi(&b, &mask, 2).unwrap();
            prop_assert_eq!(ra.border_dist(), rb.border_dist());
            for (x, y) in ra.intensity().iter().zip(rb.intensity()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn border_dist_spans_unit_interval(r in 2usize..8, c in 2usize..8, len in 1usize..4) {
            let cells: Vec<_> = (0..len).map(|k| (r, c + k)).collect();
            let mask = mask_from(14, 14, &cells);
            let img = GrayImage::new(14, 14, vec![3.0; 196]).unwrap();
            let roi = extract_roi(&img, &mask, 3).unwrap();
            let bd = roi.border_dist();
            prop_assert!(bd.contains(&0.0));
            prop_assert!(bd.contains(&1.0));
            prop_assert_eq!(&roi, &extract_roi(&img, &mask, 3).unwrap());
        }
    }
}
