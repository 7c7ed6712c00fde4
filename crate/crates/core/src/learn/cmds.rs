use nalgebra::{DMatrix, SymmetricEigen};

use super::DistanceMatrix;
use crate::error::{Error, Result};

/// Classical MDS coordinates, one row per input id.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub ids: Vec<String>,
    /// Row-major, `ids.len()` rows of `axes()` columns.
    pub coords: Vec<Vec<f64>>,
    /// Eigenvalues of the retained axes, largest first.
    pub eigenvalues: Vec<f64>,
    pub requested: usize,
}

impl Embedding {
    pub fn axes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Set when fewer positive eigenvalues existed than axes requested.
    pub fn truncated(&self) -> bool {
        self.axes() < self.requested
    }

    pub fn to_csv(&self) -> String {
        let names = ["x", "y", "z"];
        let mut s = String::from("id");
        for name in names.iter().take(self.axes()) {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (id, row) in self.ids.iter().zip(&self.coords) {
            s.push_str(id);
            for v in row {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Embeds a distance matrix in `k` dimensions by double centering and
/// eigendecomposition. Axes whose eigenvalue is not clearly positive are
/// dropped; check [`Embedding::truncated`].
pub fn cmds_embed(d: &DistanceMatrix, k: usize) -> Result<Embedding> {
    let n = d.len();
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must be 2 or 3, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "need at least {k} points for {k} axes, got {n}"
        )));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    // Average with the transpose so rounding cannot break symmetry.
    let b = (&b + b.transpose()) * 0.5;
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&c)));
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (scale * 1e-11).max(1e-12);

    let mut eigenvalues = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        if lambda <= tol {
            break;
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let s = lambda.sqrt();
        columns.push(v.into_iter().map(|x| x * s).collect());
        eigenvalues.push(lambda);
    }
    if eigenvalues.len() < k {
        log::warn!(
            "only {} positive eigenvalue(s); embedding has {} of {k} axes",
            eigenvalues.len(),
            eigenvalues.len()
        );
    }
    let coords = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok(Embedding {
        ids: d.ids.clone(),
        coords,
        eigenvalues,
        requested: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn euclid(a: &[f64], b: &[f64]) -> f64 {
        let len = a.len().max(b.len());
        (0..len)
            .map(|i| a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0))
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn from_points(points: &[Vec<f64>]) -> DistanceMatrix {
        let n = points.len();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = euclid(&points[i], &points[j]);
            }
        }
        for i in 0..n {
            for j in 0..i {
                v[i * n + j] = v[j * n + i];
            }
        }
        DistanceMatrix::new((0..n).map(|i| i.to_string()).collect(), v).unwrap()
    }

    fn assert_reproduces(d: &DistanceMatrix, e: &Embedding, tol: f64) {
        for i in 0..d.len() {
            for j in 0..d.len() {
                let got = euclid(&e.coords[i], &e.coords[j]);
                assert!((got - d.get(i, j)).abs() < tol, "({i},{j}) {got} vs {}", d.get(i, j));
            }
        }
    }

    #[test]
    fn zero_matrix_collapses_to_origin() {
        let d = DistanceMatrix::new(vec!["a".into(), "b".into(), "c".into()], vec![0.0; 9]).unwrap();
        let e = cmds_embed(&d, 2).unwrap();
        assert!(e.truncated());
        assert!(e.coords.iter().all(|r| r.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn triangle_345() {
        let d = DistanceMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.0, 3.0, 4.0, 3.0, 0.0, 5.0, 4.0, 5.0, 0.0],
        )
        .unwrap();
        let e = cmds_embed(&d, 2).unwrap();
        assert_eq!(e.axes(), 2);
        assert_reproduces(&d, &e, 1e-6);
    }

    #[test]
    fn unit_square() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let d = from_points(&pts);
        let e = cmds_embed(&d, 2).unwrap();
        assert_reproduces(&d, &e, 1e-6);
        let e3 = cmds_embed(&d, 3).unwrap();
        assert_eq!(e3.axes(), 2);
        assert!(e3.truncated());
    }

    #[test]
    fn two_points_give_one_axis() {
        let d = DistanceMatrix::new(vec!["a".into(), "b".into()], vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        let e = cmds_embed(&d, 2).unwrap();
        assert_eq!(e.axes(), 1);
        assert_reproduces(&d, &e, 1e-9);
        assert!(e.coords[0][0] > 0.0);
    }

    proptest! {
        #[test]
        fn euclidean_inputs_are_reproduced(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 3..12),
        ) {
            let d = from_points(&pts);
            let e = cmds_embed(&d, 3).unwrap();
            // Dropped axes carry (numerically) zero variance.
            for i in 0..d.len() {
                for j in 0..d.len() {
                    let got = euclid(&e.coords[i], &e.coords[j]);
                    prop_assert!((got - d.get(i, j)).abs() < 1e-6);
                }
            }
        }
    }
}
