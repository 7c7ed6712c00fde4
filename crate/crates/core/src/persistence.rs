//! Persistence barcodes in dimensions 0 and 1 over the two-element field.
//!
//! [`compute_barcodes`] runs the standard column reduction of the filtration
//! boundary matrix. [`betti_at`] computes Betti numbers of a single sublevel
//! complex from scratch (union-find and an independent rank computation), and
//! serves as the oracle the reduction is tested against.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{FilteredComplex, Simplex};
use crate::unionfind::UnionFind;
use crate::DEFAULT_CAP;

/// A bar `[birth, death]`. Deaths of bars that never die are capped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub birth: f64,
    pub death: f64,
}

impl Interval {
    pub fn new(birth: f64, death: f64) -> Result<Self> {
        if !birth.is_finite() || !death.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval [{birth}, {death}] is not finite"
            )));
        }
        if birth > death {
            return Err(Error::InvalidArgument(format!(
                "interval birth {birth} exceeds death {death}"
            )));
        }
        Ok(Self { birth, death })
    }

    /// Lebesgue measure.
    pub fn len(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.death.min(other.death) - self.birth.max(other.birth)).max(0.0)
    }

    /// Whether the bar is alive at `t` (half-open: `birth <= t < death`).
    pub fn contains(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }
}

impl TryFrom<(f64, f64)> for Interval {
    type Error = Error;

    fn try_from((b, d): (f64, f64)) -> Result<Self> {
        Interval::new(b, d)
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.birth, i.death)
    }
}

/// A multiset of intervals in one homology dimension. Intervals are kept
/// sorted by (birth, death) so equal multisets compare and serialize equal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub dim: u8,
    intervals: Vec<Interval>,
}

impl Barcode {
    pub fn new(dim: u8, mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        Self { dim, intervals }
    }

    pub fn empty(dim: u8) -> Self {
        Self {
            dim,
            intervals: Vec::new(),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of bars alive at `t`.
    pub fn alive_at(&self, t: f64) -> usize {
        self.intervals.iter().filter(|i| i.contains(t)).count()
    }

    /// Sum of interval lengths.
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    /// One `birth death` line per interval.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in &self.intervals {
            writeln!(s, "{} {}", i.birth, i.death).unwrap();
        }
        s
    }

    /// Parses the `birth death` line format. Blank lines are skipped.
    pub fn from_text(dim: u8, text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::format("<barcode>", n + 1, msg);
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<f64> {
                let tok = parts.next().ok_or_else(|| err("expected two numbers".into()))?;
                tok.parse().map_err(|_| err(format!("bad number {tok:?}")))
            };
            let (b, d) = (next()?, next()?);
            if parts.next().is_some() {
                return Err(err("expected two numbers".into()));
            }
            intervals.push(Interval::new(b, d).map_err(|e| err(e.to_string()))?);
        }
        Ok(Self::new(dim, intervals))
    }
}

/// Dimension 0 and 1 barcodes with the default cap.
pub fn compute_barcodes(k: &FilteredComplex) -> Result<(Barcode, Barcode)> {
    compute_barcodes_capped(k, DEFAULT_CAP)
}

/// Dimension 0 and 1 barcodes. Classes that never die get death `cap`, which
/// must be at least every entry value. Zero-length bars are dropped.
pub fn compute_barcodes_capped(k: &FilteredComplex, cap: f64) -> Result<(Barcode, Barcode)> {
    if !k.is_monotone() {
        return Err(Error::InvalidComplex(
            "entry values are not monotone under the face relation".into(),
        ));
    }
    if let Some(&e) = k.entries().iter().find(|&&e| e > cap) {
        return Err(Error::InvalidArgument(format!(
            "cap {cap} is below entry value {e}"
        )));
    }
    let simplices = k.simplices();
    let entries = k.entries();
    let n = simplices.len();
    let position: HashMap<Simplex, u32> = simplices
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i as u32))
        .collect();

    const NONE: u32 = u32::MAX;
    // pivot_col[row] = column whose reduced lowest entry is `row`
    let mut pivot_col = vec![NONE; n];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut cleared = vec![false; n];

    // Reduce triangles before edges; any edge that is the pivot of a reduced
    // triangle column has a zero column itself and can be skipped.
    for dim in [2usize, 1] {
        for j in 0..n {
            let s = simplices[j];
            if s.dim() != dim || cleared[j] {
                continue;
            }
            let mut col: Vec<u32> = s.facets().map(|f| position[&f]).collect();
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let other = pivot_col[low as usize];
                if other == NONE {
                    break;
                }
                col = sym_diff(&col, &reduced[other as usize]);
            }
            if let Some(&low) = col.last() {
                pivot_col[low as usize] = j as u32;
                if dim == 2 {
                    cleared[low as usize] = true;
                }
            }
            reduced[j] = col;
        }
    }

    let mut bars: [Vec<Interval>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n {
        let dim = simplices[i].dim();
        if dim > 1 {
            continue;
        }
        let positive = reduced[i].is_empty();
        if !positive {
            continue;
        }
        let birth = entries[i];
        let death = match pivot_col[i] {
            NONE => cap,
            j => entries[j as usize],
        };
        if death > birth {
            bars[dim].push(Interval { birth, death });
        }
    }
    let [b0, b1] = bars;
    Ok((Barcode::new(0, b0), Barcode::new(1, b1)))
}

fn sym_diff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Betti numbers `(b0, b1)` of the sublevel complex `{s : entry(s) <= t}`,
/// computed without the persistence reduction: `b0` by union-find and
/// `b1 = (E - V + b0) - rank(boundary_2)` with the rank taken by Gaussian
/// elimination over the two-element field.
pub fn betti_at(k: &FilteredComplex, t: f64) -> (usize, usize) {
    let live: Vec<Simplex> = k.iter().filter(|&(_, e)| e <= t).map(|(s, _)| s).collect();
    let mut vertex_index = HashMap::new();
    let mut edge_index = HashMap::new();
    for s in &live {
        match s.dim() {
            0 => {
                let n = vertex_index.len();
                vertex_index.insert(s.vertices()[0], n);
            }
            1 => {
                let n = edge_index.len();
                edge_index.insert(*s, n);
            }
            _ => {}
        }
    }
    let v = vertex_index.len();
    let e = edge_index.len();
    let mut uf = UnionFind::new(v);
    for s in live.iter().filter(|s| s.dim() == 1) {
        let vs = s.vertices();
        uf.union(vertex_index[&vs[0]], vertex_index[&vs[1]]);
    }
    let b0 = uf.components();

    let words = e.div_ceil(64);
    let mut basis: HashMap<usize, Vec<u64>> = HashMap::new();
    let mut rank = 0;
    for s in live.iter().filter(|s| s.dim() == 2) {
        let mut row = vec![0u64; words];
        for f in s.facets() {
            let c = edge_index[&f];
            row[c / 64] ^= 1 << (c % 64);
        }
        while let Some(lead) = leading_bit(&row) {
            match basis.get(&lead) {
                Some(b) => row.iter_mut().zip(b).for_each(|(x, y)| *x ^= y),
                None => {
                    basis.insert(lead, row);
                    rank += 1;
                    break;
                }
            }
        }
    }
    let cycles = e + b0 - v;
    (b0, cycles - rank)
}

fn leading_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}
