//! From panels to predictions: pairwise distance and feature matrices,
//! classical MDS, and an RBF-kernel SVM evaluated by leave-one-out
//! cross-validation.

mod cmds;
mod cv;
mod svm;

pub use cmds::{cmds_embed, Embedding};
pub use cv::{default_c_grid, default_sigma_grid, grid_sweep, loocv, ClassAccuracy, CvReport, SweepResult};
pub use svm::{rbf_kernel, svm_train, BinarySvm, KernelModel, PairModel};

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::bifiltration::BarcodePanel;
use crate::error::{Error, Result};
use crate::matching::panel_distance;

/// Symmetric matrix of panel distances with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Checks shape, zero diagonal, nonnegativity, and symmetry to 1e-9.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{n} ids need {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "nonzero diagonal at {}",
                    ids[i]
                )));
            }
            for j in 0..n {
                let (a, b) = (values[i * n + j], values[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i}, {j}) = {a} is not a finite nonnegative distance"
                    )));
                }
                if (a - b).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "asymmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Every image's distances to the whole set, as feature rows.
    pub fn as_features(&self) -> FeatureMatrix {
        FeatureMatrix {
            row_ids: self.ids.clone(),
            col_ids: self.ids.clone(),
            values: self.values.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.ids, &self.ids, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (rows, cols, values) = parse_matrix_csv(text)?;
        if rows != cols {
            return Err(Error::InvalidArgument(
                "distance matrix row and column ids differ".into(),
            ));
        }
        Self::new(rows, values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Row `x`, column `j` holds the distance from image `x` to comparison image
/// `j`. The column set is always the full comparison set.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, col_ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != row_ids.len() * col_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "{}x{} feature matrix needs {} values, got {}",
                row_ids.len(),
                col_ids.len(),
                row_ids.len() * col_ids.len(),
                values.len()
            )));
        }
        Ok(Self {
            row_ids,
            col_ids,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.cols();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Keeps the rows at `indices` (in that order) and all columns.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            col_ids: self.col_ids.clone(),
            values,
        }
    }

    /// Z-scores every column over the rows present. Constant columns become
    /// zero.
    pub fn standardized(&self) -> FeatureMatrix {
        let (n, m) = (self.rows(), self.cols());
        let mut values = self.values.clone();
        for j in 0..m {
            let mean = (0..n).map(|i| self.values[i * m + j]).sum::<f64>() / n as f64;
            let var = (0..n)
                .map(|i| (self.values[i * m + j] - mean).powi(2))
                .sum::<f64>()
                / n as f64;
            let sd = var.sqrt();
            for i in 0..n {
                values[i * m + j] = if sd > 0.0 {
                    (self.values[i * m + j] - mean) / sd
                } else {
                    0.0
                };
            }
        }
        FeatureMatrix {
            row_ids: self.row_ids.clone(),
            col_ids: self.col_ids.clone(),
            values,
        }
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(&self.row_ids, &self.col_ids, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (rows, cols, values) = parse_matrix_csv(text)?;
        Self::new(rows, cols, values)
    }
}

fn matrix_csv(rows: &[String], cols: &[String], values: &[f64]) -> String {
    let mut s = String::from("id");
    for c in cols {
        write!(s, ",{c}").unwrap();
    }
    s.push('\n');
    for (i, r) in rows.iter().enumerate() {
        s.push_str(r);
        for v in &values[i * cols.len()..(i + 1) * cols.len()] {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn parse_matrix_csv(text: &str) -> Result<(Vec<String>, Vec<String>, Vec<f64>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format("<matrix>", 1, "empty matrix file"))?;
    let mut head = header.split(',');
    if head.next().map(str::trim) != Some("id") {
        return Err(Error::format("<matrix>", 1, "header must start with \"id\""));
    }
    let cols: Vec<String> = head.map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines {
        let mut cells = line.split(',');
        rows.push(cells.next().unwrap_or_default().trim().to_string());
        let before = values.len();
        for cell in cells {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::format("<matrix>", n + 1, format!("bad number {cell:?}")))?;
            values.push(v);
        }
        if values.len() - before != cols.len() {
            return Err(Error::format(
                "<matrix>",
                n + 1,
                format!("expected {} values", cols.len()),
            ));
        }
    }
    Ok((rows, cols, values))
}

/// `F[x][j] = panel_distance(panels[x], comparison[j])`.
pub fn feature_vectors(panels: &[BarcodePanel], comparison: &[BarcodePanel]) -> Result<FeatureMatrix> {
    let m = comparison.len();
    let values = (0..panels.len() * m)
        .into_par_iter()
        .map(|k| panel_distance(&panels[k / m], &comparison[k % m]))
        .collect::<Result<Vec<f64>>>()?;
    FeatureMatrix::new(
        panels.iter().map(|p| p.id.clone()).collect(),
        comparison.iter().map(|p| p.id.clone()).collect(),
        values,
    )
}

/// Pairwise panel distances. Each unordered pair is computed once and
/// mirrored, so the result is exactly symmetric.
pub fn distance_matrix(panels: &[BarcodePanel]) -> Result<DistanceMatrix> {
    let n = panels.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let upper = pairs
        .par_iter()
        .map(|&(i, j)| panel_distance(&panels[i], &panels[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(upper) {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    DistanceMatrix::new(panels.iter().map(|p| p.id.clone()).collect(), values)
}
