//! Simplicial complexes on region pixels and their sublevel filtrations.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::RoiImage;

/// Direction of a sublevel filtration. A decreasing filtration of `f` is
/// realized as the increasing filtration of `1 - f`, so every entry value
/// stays on the `[0, 1]` axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Increasing, Direction::Decreasing];

    /// Maps a vertex value onto the filtration axis.
    pub fn apply(self, value: f64) -> f64 {
        match self {
            Direction::Increasing => value,
            Direction::Decreasing => 1.0 - value,
        }
    }
}

/// A vertex, edge, or triangle given by its sorted vertex ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    // field order gives the (dim, lexicographic vertices) ordering
    len: u8,
    verts: [u32; 3],
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self {
            len: 1,
            verts: [v, 0, 0],
        }
    }

    pub fn edge(a: u32, b: u32) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        assert!(a != b, "degenerate edge");
        Self {
            len: 2,
            verts: [a, b, 0],
        }
    }

    pub fn triangle(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        assert!(v[0] != v[1] && v[1] != v[2], "degenerate triangle");
        Self { len: 3, verts: v }
    }

    /// Builds a simplex from 1 to 3 distinct vertex ids in any order.
    pub fn from_vertices(verts: &[u32]) -> Result<Self> {
        let mut v = verts.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.len() != verts.len() || v.is_empty() || v.len() > 3 {
            return Err(Error::InvalidComplex(format!(
                "simplex needs 1 to 3 distinct vertices, got {verts:?}"
            )));
        }
        let mut arr = [0; 3];
        arr[..v.len()].copy_from_slice(&v);
        Ok(Self {
            len: v.len() as u8,
            verts: arr,
        })
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    /// Codimension-one faces; empty for a vertex.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        let v = self.vertices();
        let n = if v.len() > 1 { v.len() } else { 0 };
        (0..n).map(move |skip| {
            let rest: Vec<u32> = v
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &x)| x)
                .collect();
            Simplex::from_vertices(&rest).expect("facet of valid simplex")
        })
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.vertices())
    }
}

/// The unfiltered complex on a set of pixels: one vertex per pixel, one edge
/// per 8-adjacent pair, one triangle per mutually 8-adjacent triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    pub vertex_count: usize,
    pub edges: Vec<[u32; 2]>,
    pub triangles: Vec<[u32; 3]>,
}

impl Complex {
    /// Builds the complex on `pixels`, which must be unique and in row-major
    /// order; vertex `i` is `pixels[i]`.
    pub fn from_pixels(pixels: &[(usize, usize)]) -> Self {
        let lookup = |r: usize, c: usize| pixels.binary_search(&(r, c)).ok().map(|i| i as u32);
        let mut edges = Vec::new();
        for (i, &(r, c)) in pixels.iter().enumerate() {
            // forward neighbors only, so each edge is emitted once
            let forward = [
                Some((r, c + 1)),
                c.checked_sub(1).map(|cl| (r + 1, cl)),
                Some((r + 1, c)),
                Some((r + 1, c + 1)),
            ];
            for (nr, nc) in forward.into_iter().flatten() {
                if let Some(j) = lookup(nr, nc) {
                    edges.push([i as u32, j]);
                }
            }
        }

        // Every mutually adjacent triple spans exactly one 2x2 block, so
        // enumerating blocks by their top-left corner visits each triangle
        // once.
        let anchors: BTreeSet<(usize, usize)> = pixels
            .iter()
            .flat_map(|&(r, c)| {
                let rows = r.saturating_sub(1)..=r;
                rows.flat_map(move |ar| (c.saturating_sub(1)..=c).map(move |ac| (ar, ac)))
            })
            .collect();
        let mut triangles = Vec::new();
        for (r, c) in anchors {
            let present: Vec<u32> = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]
                .into_iter()
                .filter_map(|(br, bc)| lookup(br, bc))
                .collect();
            triangles.extend(block_triangles(&present));
        }
        triangles.sort_unstable();
        edges.sort_unstable();
        Self {
            vertex_count: pixels.len(),
            edges,
            triangles,
        }
    }

    pub fn from_roi(roi: &RoiImage) -> Self {
        Self::from_pixels(roi.pixels())
    }

    pub fn simplex_count(&self) -> usize {
        self.vertex_count + self.edges.len() + self.triangles.len()
    }
}

fn block_triangles(present: &[u32]) -> Vec<[u32; 3]> {
    match present.len() {
        3 => {
            let mut t = [present[0], present[1], present[2]];
            t.sort_unstable();
            vec![t]
        }
        4 => (0..4)
            .map(|skip| {
                let mut t = [0; 3];
                let mut k = 0;
                for (i, &v) in present.iter().enumerate() {
                    if i != skip {
                        t[k] = v;
                        k += 1;
                    }
                }
                t.sort_unstable();
                t
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Builds the complex on a region's pixels.
pub fn build_complex(roi: &RoiImage) -> Complex {
    Complex::from_roi(roi)
}

/// A complex whose simplices carry the value at which they enter the
/// filtration. Simplices are kept in filtration order: ascending entry, then
/// dimension, then vertex tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct FilteredComplex {
    simplices: Vec<Simplex>,
    entries: Vec<f64>,
    direction: Direction,
}

fn filtration_order(a: (&Simplex, f64), b: (&Simplex, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0))
}

impl FilteredComplex {
    /// Assembles a filtered complex from explicit entry values. The simplex
    /// set must be closed under faces and free of duplicates; monotonicity of
    /// the entries is not required here (see [`Self::is_monotone`]).
    pub fn new(simplices: Vec<Simplex>, entries: Vec<f64>, direction: Direction) -> Result<Self> {
        if simplices.len() != entries.len() {
            return Err(Error::InvalidComplex(format!(
                "{} simplices but {} entry values",
                simplices.len(),
                entries.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidComplex(format!("non-finite entry value {v}")));
        }
        let set: HashSet<Simplex> = simplices.iter().copied().collect();
        if set.len() != simplices.len() {
            return Err(Error::InvalidComplex("duplicate simplex".into()));
        }
        for s in &simplices {
            if let Some(face) = s.facets().find(|f| !set.contains(f)) {
                return Err(Error::InvalidComplex(format!(
                    "face {face:?} of {s:?} is missing"
                )));
            }
        }
        Ok(Self::from_sorted(simplices, entries, direction))
    }

    fn from_sorted(simplices: Vec<Simplex>, entries: Vec<f64>, direction: Direction) -> Self {
        let mut pairs: Vec<(Simplex, f64)> = simplices.into_iter().zip(entries).collect();
        pairs.sort_by(|a, b| filtration_order((&a.0, a.1), (&b.0, b.1)));
        let (simplices, entries) = pairs.into_iter().unzip();
        Self {
            simplices,
            entries,
            direction,
        }
    }

    pub fn empty(direction: Direction) -> Self {
        Self {
            simplices: Vec::new(),
            entries: Vec::new(),
            direction,
        }
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Simplex, f64)> + '_ {
        self.simplices.iter().copied().zip(self.entries.iter().copied())
    }

    /// Number of simplices of each dimension 0, 1, 2.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in &self.simplices {
            c[s.dim()] += 1;
        }
        c
    }

    /// Whether every face enters no later than its cofaces.
    pub fn is_monotone(&self) -> bool {
        let entry: std::collections::HashMap<Simplex, f64> = self.iter().collect();
        self.iter().all(|(s, e)| s.facets().all(|f| entry[&f] <= e))
    }

    /// The full subcomplex on the vertices accepted by `keep`: a simplex
    /// survives iff all of its vertices do. Entry values are unchanged.
    pub fn restrict(&self, keep: impl Fn(u32) -> bool) -> FilteredComplex {
        let (simplices, entries) = self
            .iter()
            .filter(|(s, _)| s.vertices().iter().all(|&v| keep(v)))
            .unzip();
        FilteredComplex {
            simplices,
            entries,
            direction: self.direction,
        }
    }

    /// Whether every simplex of `self` is in `other` with the same entry.
    pub fn is_subcomplex_of(&self, other: &FilteredComplex) -> bool {
        let theirs: std::collections::HashMap<Simplex, u64> =
            other.iter().map(|(s, e)| (s, e.to_bits())).collect();
        self.iter()
            .all(|(s, e)| theirs.get(&s) == Some(&e.to_bits()))
    }
}

/// Attaches sublevel entry values to a complex: every simplex enters at the
/// maximum of its vertex values, after mapping them through `direction`.
pub fn filter_complex(
    complex: &Complex,
    vertex_values: &[f64],
    direction: Direction,
) -> Result<FilteredComplex> {
    if vertex_values.len() != complex.vertex_count {
        return Err(Error::InvalidArgument(format!(
            "{} vertex values for {} vertices",
            vertex_values.len(),
            complex.vertex_count
        )));
    }
    if let Some(v) = vertex_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!(
            "vertex value {v} outside [0, 1]"
        )));
    }
    let g: Vec<f64> = vertex_values.iter().map(|&v| direction.apply(v)).collect();
    let mut simplices = Vec::with_capacity(complex.simplex_count());
    let mut entries = Vec::with_capacity(complex.simplex_count());
    for (v, &e) in g.iter().enumerate() {
        simplices.push(Simplex::vertex(v as u32));
        entries.push(e);
    }
    for &[a, b] in &complex.edges {
        simplices.push(Simplex::edge(a, b));
        entries.push(g[a as usize].max(g[b as usize]));
    }
    for &[a, b, c] in &complex.triangles {
        simplices.push(Simplex::triangle(a, b, c));
        entries.push(g[a as usize].max(g[b as usize]).max(g[c as usize]));
    }
    Ok(FilteredComplex::from_sorted(simplices, entries, direction))
}
