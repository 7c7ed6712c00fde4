use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

/// Gaussian kernel `exp(-‖u−v‖² / (2σ²))`.
pub fn rbf_kernel(u: &[f64], v: &[f64], sigma: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "feature lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    check_positive("sigma", sigma)?;
    Ok(kernel_from_sq(squared_distance(u, v), sigma))
}

pub(crate) fn squared_distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn kernel_from_sq(sq: f64, sigma: f64) -> f64 {
    (-sq / (2.0 * sigma * sigma)).exp()
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_rows(rows: &[Vec<f64>], labels: &[String]) -> Result<()> {
    if rows.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} feature rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().position(|r| r.len() != first.len()) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} has {} features, expected {}",
                rows[bad].len(),
                first.len()
            )));
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("features must be finite".into()));
    }
    Ok(())
}

/// Dual solution for labels `y` in {+1, −1}: the decision function is
/// `Σ alpha[i]·y[i]·K(x_i, x) − rho`.
#[derive(Clone, Debug)]
pub(crate) struct Dual {
    pub alpha: Vec<f64>,
    pub rho: f64,
}

/// C-SVC dual by SMO with second-order working set selection. `kmat` is the
/// row-major kernel matrix of the training rows.
fn solve_dual(kmat: &[f64], y: &[f64], c: f64) -> Dual {
    let m = y.len();
    let k = |i: usize, j: usize| kmat[i * m + j];
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let max_iter = (100 * m).max(10_000_000);

    for _ in 0..max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..m {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..m {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let diff = gmax + yg;
            if diff > 0.0 {
                let quad = k(i, i) + k(t, t) - 2.0 * k(i, t);
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(diff * diff) / quad;
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        if gmax + gmax2 < KKT_TOL {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        let quad = if quad > 0.0 { quad } else { TAU };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..m {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    Dual { alpha, rho }
}

/// Solves with the labels flipped when the first label is −1, so that a
/// problem and its label-swapped twin share one optimization trajectory and
/// their decision functions are exact negations.
pub(crate) fn solve_oriented(kmat: &[f64], y: &[f64], c: f64) -> Dual {
    if y.first().is_some_and(|&v| v < 0.0) {
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        let mut d = solve_dual(kmat, &flipped, c);
        d.rho = -d.rho;
        d
    } else {
        solve_dual(kmat, y, c)
    }
}

/// Two-class RBF machine. Positive decision values mean the `+1` side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub sigma: f64,
    pub c: f64,
    pub support: Vec<Vec<f64>>,
    /// `alpha_i · y_i` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    /// Trains on rows `x` with labels `y[i] ∈ {+1, −1}`. Both labels must
    /// occur.
    pub fn train(x: &[Vec<f64>], y: &[f64], sigma: f64, c: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("C", c)?;
        let labels: Vec<String> = y.iter().map(|v| v.to_string()).collect();
        check_rows(x, &labels)?;
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument("binary labels must be +1 or -1".into()));
        }
        if !(y.contains(&1.0) && y.contains(&-1.0)) {
            return Err(Error::SingleClass(
                "binary training needs both +1 and -1 labels".into(),
            ));
        }
        let m = x.len();
        let mut kmat = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                kmat[i * m + j] = kernel_from_sq(squared_distance(&x[i], &x[j]), sigma);
            }
        }
        let dual = solve_oriented(&kmat, y, c);
        Ok(Self::from_dual(&dual, y, |i| x[i].clone(), sigma, c))
    }

    pub(crate) fn from_dual(
        dual: &Dual,
        y: &[f64],
        row: impl Fn(usize) -> Vec<f64>,
        sigma: f64,
        c: f64,
    ) -> Self {
        let mut support = Vec::new();
        let mut coef = Vec::new();
        for (i, &a) in dual.alpha.iter().enumerate() {
            if a > 0.0 {
                support.push(row(i));
                coef.push(a * y[i]);
            }
        }
        Self {
            sigma,
            c,
            support,
            coef,
            bias: -dual.rho,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let s: f64 = self
            .support
            .iter()
            .zip(&self.coef)
            .map(|(sv, &a)| a * kernel_from_sq(squared_distance(sv, x), self.sigma))
            .sum();
        s + self.bias
    }
}

/// One one-vs-one sub-problem: positive decisions vote for `positive`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    pub svm: BinarySvm,
}

/// Multiclass RBF SVM by one-vs-one voting over the sorted class labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub sigma: f64,
    pub c: f64,
    pub classes: Vec<String>,
    pub pairs: Vec<PairModel>,
}

impl KernelModel {
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.pairs.iter().map(|p| p.svm.decision(x)).collect()
    }

    pub fn predict_index(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.classes.len()];
        for p in &self.pairs {
            if p.svm.decision(x) > 0.0 {
                votes[p.positive] += 1;
            } else {
                votes[p.negative] += 1;
            }
        }
        argmax_lowest(&votes)
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        &self.classes[self.predict_index(x)]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub(crate) fn argmax_lowest(votes: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best
}

/// Sorted distinct labels and each row's index into them.
pub(crate) fn class_indices(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search(l).unwrap())
        .collect();
    (classes, idx)
}

/// Orders rows by (class, features) so training does not depend on the order
/// samples were supplied in. Identical rows tie on the original index, which
/// cannot change the result.
pub(crate) fn canonical_rank(rows: &[Vec<f64>], class_of: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| {
        class_of[a]
            .cmp(&class_of[b])
            .then_with(|| {
                rows[a]
                    .iter()
                    .zip(&rows[b])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; rows.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// Index-based one-vs-one trainer over a shared kernel matrix. Used both for
/// final models and for every cross-validation fold.
pub(crate) struct OvoProblem<'a> {
    pub kmat: &'a [f64],
    pub n: usize,
    pub class_of: &'a [usize],
    pub rank: &'a [usize],
    pub n_classes: usize,
    pub c: f64,
}

pub(crate) struct OvoPair {
    pub positive: usize,
    pub negative: usize,
    pub rows: Vec<usize>,
    pub y: Vec<f64>,
    pub dual: Dual,
}

impl OvoProblem<'_> {
    /// Trains every pair of classes present in `train`. `None` when fewer
    /// than two classes are present.
    pub fn train(&self, train: &[usize]) -> Option<Vec<OvoPair>> {
        let mut ordered = train.to_vec();
        ordered.sort_by_key(|&i| self.rank[i]);
        let mut present = vec![false; self.n_classes];
        for &i in &ordered {
            present[self.class_of[i]] = true;
        }
        if present.iter().filter(|&&p| p).count() < 2 {
            return None;
        }
        let mut pairs = Vec::new();
        for a in 0..self.n_classes {
            for b in a + 1..self.n_classes {
                if !present[a] || !present[b] {
                    continue;
                }
                let rows: Vec<usize> = ordered
                    .iter()
                    .copied()
                    .filter(|&i| self.class_of[i] == a || self.class_of[i] == b)
                    .collect();
                let y: Vec<f64> = rows
                    .iter()
                    .map(|&i| if self.class_of[i] == a { 1.0 } else { -1.0 })
                    .collect();
                let m = rows.len();
                let mut sub = vec![0.0; m * m];
                for (p, &ri) in rows.iter().enumerate() {
                    for (q, &rj) in rows.iter().enumerate() {
                        sub[p * m + q] = self.kmat[ri * self.n + rj];
                    }
                }
                let dual = solve_oriented(&sub, &y, self.c);
                pairs.push(OvoPair {
                    positive: a,
                    negative: b,
                    rows,
                    y,
                    dual,
                });
            }
        }
        Some(pairs)
    }

    /// Predicts row `x` of the kernel matrix with trained pairs.
    pub fn predict(&self, pairs: &[OvoPair], x: usize) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for p in pairs {
            let s: f64 = p
                .rows
                .iter()
                .zip(&p.dual.alpha)
                .zip(&p.y)
                .filter(|((_, &a), _)| a > 0.0)
                .map(|((&r, &a), &y)| a * y * self.kmat[r * self.n + x])
                .sum();
            if s - p.dual.rho > 0.0 {
                votes[p.positive] += 1;
            } else {
                votes[p.negative] += 1;
            }
        }
        argmax_lowest(&votes)
    }
}

pub(crate) fn kernel_matrix(sq: &[f64], sigma: f64) -> Vec<f64> {
    sq.iter().map(|&d| kernel_from_sq(d, sigma)).collect()
}

pub(crate) fn squared_distances(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&rows[i], &rows[j]);
            sq[i * n + j] = d;
            sq[j * n + i] = d;
        }
    }
    sq
}

/// Trains a one-vs-one RBF SVM. Class indices follow the sorted labels.
pub fn svm_train(rows: &[Vec<f64>], labels: &[String], sigma: f64, c: f64) -> Result<KernelModel> {
    check_positive("sigma", sigma)?;
    check_positive("C", c)?;
    check_rows(rows, labels)?;
    let (classes, class_of) = class_indices(labels);
    if classes.len() < 2 {
        return Err(Error::SingleClass(format!(
            "all {} samples are labelled {:?}",
            labels.len(),
            classes.first().map(String::as_str).unwrap_or("")
        )));
    }
    let n = rows.len();
    let kmat = kernel_matrix(&squared_distances(rows), sigma);
    let rank = canonical_rank(rows, &class_of);
    let problem = OvoProblem {
        kmat: &kmat,
        n,
        class_of: &class_of,
        rank: &rank,
        n_classes: classes.len(),
        c,
    };
    let all: Vec<usize> = (0..n).collect();
    let pairs = problem
        .train(&all)
        .expect("two classes present")
        .into_iter()
        .map(|p| PairModel {
            positive: p.positive,
            negative: p.negative,
            svm: BinarySvm::from_dual(&p.dual, &p.y, |k| rows[p.rows[k]].clone(), sigma, c),
        })
        .collect();
    Ok(KernelModel {
        sigma,
        c,
        classes,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), 1.0);
        let sigma = 0.7;
        let v = rbf_kernel(&[0.0], &[sigma * 2f64.sqrt()], sigma).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-12);
        assert!((rbf_kernel(&[0.0], &[3.0], 1e6).unwrap() - 1.0).abs() < 1e-9);
        assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn two_point_dual_matches_hand_solution() {
        // α₁ = α₂ = 1/(1−k) with k = K(−1, 1); the boundary is the midpoint.
        let x = vec![vec![-1.0], vec![1.0]];
        let m = svm_train(&x, &labels(&["A", "B"]), 1.0, 1e6).unwrap();
        let svm = &m.pairs[0].svm;
        let k = (-2f64).exp();
        let alpha = 1.0 / (1.0 - k);
        assert!((svm.coef[0] - alpha).abs() < 1e-9);
        assert!((svm.coef[1] + alpha).abs() < 1e-9);
        assert!(svm.bias.abs() < 1e-12);
        assert!(svm.decision(&[0.0]).abs() < 1e-12);
        assert!(svm.decision(&[-0.01]) > 0.0 && svm.decision(&[0.01]) < 0.0);
        assert_eq!(m.predict(&[-1.0]), "A");
        assert_eq!(m.predict(&[1.0]), "B");
    }

    #[test]
    fn conflicting_duplicates_train() {
        let x = vec![vec![0.0], vec![0.0], vec![1.0]];
        let m = svm_train(&x, &labels(&["A", "B", "A"]), 1.0, 10.0).unwrap();
        assert!(m.pairs[0].svm.coef.iter().all(|c| c.is_finite()));
        assert!(m.pairs[0].svm.bias.is_finite());
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            svm_train(&x, &labels(&["A", "A"]), 1.0, 1.0),
            Err(Error::SingleClass(_))
        ));
        assert!(svm_train(&x, &labels(&["A", "B"]), 1.0, 0.0).is_err());
    }

    pub(crate) fn blobs(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (label, cx) in [("neg", -3.0), ("pos", 3.0)] {
            for _ in 0..n_per {
                x.push(vec![
                    cx + rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]);
                y.push(label.to_string());
            }
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_fit_exactly() {
        let (x, y) = blobs(10, 7);
        let m = svm_train(&x, &y, 1.0, 100.0).unwrap();
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(m.predict(row), label);
        }
        // The decision on a coarse grid flips exactly once along the axis
        // between the blobs.
        let signs: Vec<bool> = (-40..=40)
            .map(|i| m.pairs[0].svm.decision(&[i as f64 * 0.1, 0.0]) > 0.0)
            .collect();
        let flips = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
    }

    #[test]
    fn three_classes_vote() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.2, 0.1],
            vec![5.0, 0.0],
            vec![5.1, 0.2],
            vec![0.0, 5.0],
            vec![0.1, 5.2],
        ];
        let y = labels(&["c", "c", "a", "a", "b", "b"]);
        let m = svm_train(&x, &y, 1.0, 10.0).unwrap();
        assert_eq!(m.classes, labels(&["a", "b", "c"]));
        assert_eq!(m.pairs.len(), 3);
        for (row, label) in x.iter().zip(&y) {
            assert_eq!(m.predict(row), label);
        }
        let back = KernelModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn vote_ties_go_to_lowest_index() {
        assert_eq!(argmax_lowest(&[1, 1, 1]), 0);
        assert_eq!(argmax_lowest(&[0, 2, 2]), 1);
    }

    proptest! {
        #[test]
        fn label_swap_negates_decision(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..16),
            flips in prop::collection::vec(any::<bool>(), 16),
            sigma in 0.3f64..3.0,
            c in 0.1f64..100.0,
            probe in (-3.0f64..3.0, -3.0f64..3.0),
        ) {
            let x: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let mut y: Vec<f64> = flips[..x.len()].iter().map(|&f| if f { 1.0 } else { -1.0 }).collect();
            y[0] = 1.0;
            y[1] = -1.0;
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let a = BinarySvm::train(&x, &y, sigma, c).unwrap();
            let b = BinarySvm::train(&x, &neg, sigma, c).unwrap();
            let p = [probe.0, probe.1];
            prop_assert_eq!(a.decision(&p), -b.decision(&p));
        }

        #[test]
        fn kernel_matrix_is_psd(
            pts in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 3), 2..20),
            sigma in 0.1f64..5.0,
        ) {
            let n = pts.len();
            let k = kernel_matrix(&squared_distances(&pts), sigma);
            let m = DMatrix::from_row_slice(n, n, &k);
            prop_assert_eq!(m.clone(), m.transpose());
            let eig = SymmetricEigen::new(m);
            prop_assert!(eig.eigenvalues.min() >= -1e-8);
        }

        #[test]
        fn dual_satisfies_constraints(
            pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..16),
            flips in prop::collection::vec(any::<bool>(), 16),
            c in 0.1f64..50.0,
        ) {
            let x: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let mut y: Vec<f64> = flips[..x.len()].iter().map(|&f| if f { 1.0 } else { -1.0 }).collect();
            y[0] = -1.0;
            y[1] = 1.0;
            let kmat = kernel_matrix(&squared_distances(&x), 1.0);
            let d = solve_oriented(&kmat, &y, c);
            let balance: f64 = d.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
            prop_assert!(balance.abs() < 1e-9 * c.max(1.0) * x.len() as f64);
            prop_assert!(d.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        }
    }
}
