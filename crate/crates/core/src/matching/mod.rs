//! The matching metric between barcodes: the minimum, over all partial
//! matchings, of the summed symmetric differences of matched intervals plus
//! the lengths of unmatched intervals.

pub mod hungarian;

use crate::bifiltration::BarcodePanel;
use crate::error::{Error, Result};
use crate::persistence::{Barcode, Interval};
use crate::unionfind::UnionFind;
use std::collections::BTreeMap;

/// Measure of the symmetric difference of two intervals.
pub fn delta(a: &Interval, b: &Interval) -> f64 {
    (a.len() + b.len() - 2.0 * a.overlap(b)).max(0.0)
}

/// Square cost matrix of size `n1 + n2` whose perfect assignments correspond
/// to partial matchings between two barcodes:
///
/// ```text
///            J_1..J_n2        diag(I)
///   I_i   [ delta(I_i, J_j) | len(I_i) on diagonal, blocked elsewhere ]
///   diag  [ len(J_j) on diagonal, blocked elsewhere | 0               ]
/// ```
///
/// Blocked cells hold a finite sentinel larger than any feasible total.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n1: usize,
    n2: usize,
    sentinel: f64,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(a: &Barcode, b: &Barcode) -> Self {
        let (ia, ib) = (a.intervals(), b.intervals());
        let (n1, n2) = (ia.len(), ib.len());
        let n = n1 + n2;
        let sentinel = a.total_length() + b.total_length() + 1.0;
        let mut costs = vec![0.0; n * n];
        for (i, x) in ia.iter().enumerate() {
            let row = &mut costs[i * n..(i + 1) * n];
            for (j, y) in ib.iter().enumerate() {
                row[j] = delta(x, y);
            }
            for k in 0..n1 {
                row[n2 + k] = if k == i { x.len() } else { sentinel };
            }
        }
        for (j, y) in ib.iter().enumerate() {
            let row = &mut costs[(n1 + j) * n..(n1 + j + 1) * n];
            for (k, cell) in row[..n2].iter_mut().enumerate() {
                *cell = if k == j { y.len() } else { sentinel };
            }
            // bottom-right block stays zero
        }
        Self {
            n1,
            n2,
            sentinel,
            costs,
        }
    }

    pub fn size(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn sentinel(&self) -> f64 {
        self.sentinel
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.size() + col]
    }

    /// Optimal assignment and its total cost.
    pub fn solve(&self) -> (Vec<usize>, f64) {
        let n = self.size();
        let assignment = hungarian::solve(&self.costs, n);
        let total = assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| self.costs[i * n + j])
            .sum();
        (assignment, total)
    }
}

/// The matching distance between two capped barcodes.
///
/// Since `delta(I, J) = |I| + |J| - 2 overlap(I, J)`, the distance equals the
/// total length of both barcodes minus twice the largest total overlap of a
/// matching. Only overlapping pairs can contribute, so the maximum is taken
/// separately on each connected component of the overlap graph.
pub fn barcode_distance(a: &Barcode, b: &Barcode) -> f64 {
    let (ia, ib) = (a.intervals(), b.intervals());
    let (n1, n2) = (ia.len(), ib.len());
    let mut uf = UnionFind::new(n1 + n2);
    for (i, x) in ia.iter().enumerate() {
        for (j, y) in ib.iter().enumerate() {
            if x.overlap(y) > 0.0 {
                uf.union(i, n1 + j);
            }
        }
    }
    let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..n1 {
        groups.entry(uf.find(i)).or_default().0.push(i);
    }
    for j in 0..n2 {
        groups.entry(uf.find(n1 + j)).or_default().1.push(j);
    }
    let mut matched = 0.0;
    for (rows, cols) in groups.values() {
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        matched += max_overlap(ia, rows, ib, cols);
    }
    (a.total_length() + b.total_length() - 2.0 * matched).max(0.0)
}

fn max_overlap(ia: &[Interval], rows: &[usize], ib: &[Interval], cols: &[usize]) -> f64 {
    let (short, short_idx, long, long_idx) = if rows.len() <= cols.len() {
        (ia, rows, ib, cols)
    } else {
        (ib, cols, ia, rows)
    };
    let (n, m) = (short_idx.len(), long_idx.len());
    let mut costs = Vec::with_capacity(n * m);
    for &i in short_idx {
        for &j in long_idx {
            costs.push(-short[i].overlap(&long[j]));
        }
    }
    hungarian::solve_rect(&costs, n, m)
        .iter()
        .enumerate()
        .map(|(r, &c)| -costs[r * m + c])
        .sum()
}

/// The matching distance solved directly as one `(n1 + n2)`-square
/// assignment over [`CostMatrix`]. Slower than [`barcode_distance`]; kept as
/// an independent route for cross-checking.
pub fn dense_distance(a: &Barcode, b: &Barcode) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) => return b.total_length(),
        (false, true) => return a.total_length(),
        _ => {}
    }
    let cm = CostMatrix::new(a, b);
    let (_, total) = cm.solve();
    assert!(
        total.is_finite() && total < cm.sentinel(),
        "assignment used a blocked cell"
    );
    total
}

/// Largest `|a| + |b|` accepted by [`brute_force_distance`].
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// The matching distance by exhaustive enumeration of partial matchings.
pub fn brute_force_distance(a: &Barcode, b: &Barcode) -> Result<f64> {
    let total = a.len() + b.len();
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            max: BRUTE_FORCE_LIMIT,
            got: total,
        });
    }
    fn go(ia: &[Interval], ib: &[Interval], i: usize, used: &mut [bool]) -> f64 {
        if i == ia.len() {
            return ib
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(j, _)| j.len())
                .sum();
        }
        let mut best = ia[i].len() + go(ia, ib, i + 1, used);
        for j in 0..ib.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(delta(&ia[i], &ib[j]) + go(ia, ib, i + 1, used));
                used[j] = false;
            }
        }
        best
    }
    Ok(go(
        a.intervals(),
        b.intervals(),
        0,
        &mut vec![false; b.len()],
    ))
}

/// Sum of barcode distances over every key of two panels with the same
/// layout.
pub fn panel_distance(a: &BarcodePanel, b: &BarcodePanel) -> Result<f64> {
    if !a.same_layout(b) {
        return Err(Error::KeyMismatch(format!(
            "cannot compare a {} panel with {} slices to a {} panel with {} slices",
            a.mode(),
            a.slices(),
            b.mode(),
            b.slices()
        )));
    }
    let mut sum = 0.0;
    for ((ka, ba), (kb, bb)) in a.iter().zip(b.iter()) {
        debug_assert_eq!(ka, kb);
        sum += barcode_distance(ba, bb);
    }
    Ok(sum)
}
