use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{
    canonical_rank, check_positive, check_rows, class_indices, kernel_matrix, squared_distances,
    OvoProblem,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub label: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Leave-one-out outcome at one `(σ, C)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub sigma: f64,
    pub c: f64,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
    /// Predicted label per held-out row; `None` when its training fold held
    /// a single class.
    pub predictions: Vec<Option<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best: CvReport,
    /// `(σ, C, accuracy)` for every grid point, σ-major in grid order.
    pub grid: Vec<(f64, f64, f64)>,
}

/// `2^-8 ..= 2^8`.
pub fn default_sigma_grid() -> Vec<f64> {
    (-8..=8).map(|e| 2f64.powi(e)).collect()
}

/// `2^-5 ..= 2^15`.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=15).map(|e| 2f64.powi(e)).collect()
}

struct Prepared {
    classes: Vec<String>,
    class_of: Vec<usize>,
    rank: Vec<usize>,
    sq: Vec<f64>,
}

fn prepare(rows: &[Vec<f64>], labels: &[String]) -> Result<Prepared> {
    check_rows(rows, labels)?;
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "leave-one-out needs at least 2 samples, got {}",
            rows.len()
        )));
    }
    let (classes, class_of) = class_indices(labels);
    let rank = canonical_rank(rows, &class_of);
    Ok(Prepared {
        classes,
        class_of,
        rank,
        sq: squared_distances(rows),
    })
}

fn run_loocv(p: &Prepared, kmat: &[f64], sigma: f64, c: f64, parallel: bool) -> CvReport {
    let n = p.class_of.len();
    let problem = OvoProblem {
        kmat,
        n,
        class_of: &p.class_of,
        rank: &p.rank,
        n_classes: p.classes.len(),
        c,
    };
    let fold = |held: usize| -> Option<usize> {
        let train: Vec<usize> = (0..n).filter(|&i| i != held).collect();
        let pairs = problem.train(&train)?;
        Some(problem.predict(&pairs, held))
    };
    let predicted: Vec<Option<usize>> = if parallel {
        (0..n).into_par_iter().map(fold).collect()
    } else {
        (0..n).map(fold).collect()
    };

    let mut per_class: Vec<ClassAccuracy> = p
        .classes
        .iter()
        .map(|l| ClassAccuracy {
            label: l.clone(),
            correct: 0,
            total: 0,
            accuracy: 0.0,
        })
        .collect();
    for (i, pred) in predicted.iter().enumerate() {
        let row = &mut per_class[p.class_of[i]];
        row.total += 1;
        if *pred == Some(p.class_of[i]) {
            row.correct += 1;
        }
    }
    for row in &mut per_class {
        row.accuracy = row.correct as f64 / row.total as f64;
    }
    let correct = per_class.iter().map(|r| r.correct).sum();
    CvReport {
        sigma,
        c,
        correct,
        total: n,
        accuracy: correct as f64 / n as f64,
        per_class,
        predictions: predicted
            .into_iter()
            .map(|o| o.map(|k| p.classes[k].clone()))
            .collect(),
    }
}

/// Leave-one-out accuracy of the one-vs-one RBF SVM. A fold whose training
/// rows hold a single class counts as an error.
pub fn loocv(rows: &[Vec<f64>], labels: &[String], sigma: f64, c: f64) -> Result<CvReport> {
    check_positive("sigma", sigma)?;
    check_positive("C", c)?;
    let p = prepare(rows, labels)?;
    let kmat = kernel_matrix(&p.sq, sigma);
    Ok(run_loocv(&p, &kmat, sigma, c, true))
}

/// Exhaustive leave-one-out over `sigmas × cs`. The winner has the most
/// correct predictions, then the smaller C, then the smaller σ.
pub fn grid_sweep(
    rows: &[Vec<f64>],
    labels: &[String],
    sigmas: &[f64],
    cs: &[f64],
) -> Result<SweepResult> {
    if sigmas.is_empty() || cs.is_empty() {
        return Err(Error::InvalidArgument("parameter grids must be non-empty".into()));
    }
    for &s in sigmas {
        check_positive("sigma", s)?;
    }
    for &c in cs {
        check_positive("C", c)?;
    }
    let p = prepare(rows, labels)?;
    let kernels: Vec<Vec<f64>> = sigmas.par_iter().map(|&s| kernel_matrix(&p.sq, s)).collect();
    let points: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|s| (0..cs.len()).map(move |c| (s, c)))
        .collect();
    let reports: Vec<CvReport> = points
        .par_iter()
        .map(|&(s, c)| run_loocv(&p, &kernels[s], sigmas[s], cs[c], false))
        .collect();
    let grid = reports.iter().map(|r| (r.sigma, r.c, r.accuracy)).collect();
    let best = reports
        .into_iter()
        .reduce(|a, b| {
            let b_wins = b.correct > a.correct
                || (b.correct == a.correct
                    && (b.c < a.c || (b.c == a.c && b.sigma < a.sigma)));
            if b_wins {
                b
            } else {
                a
            }
        })
        .expect("non-empty grid");
    log::debug!(
        "best sigma={} C={} accuracy={:.4}",
        best.sigma,
        best.c,
        best.accuracy
    );
    Ok(SweepResult { best, grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
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
    fn separable_blobs() {
        let (x, y) = blobs(20, 3);
        let r = loocv(&x, &y, 1.0, 10.0).unwrap();
        assert!(r.accuracy >= 0.95, "{}", r.accuracy);
        assert_eq!(r.per_class.len(), 2);
        assert_eq!(r.per_class[0].total, 20);
    }

    #[test]
    fn lone_minority_is_always_wrong() {
        let (x, _) = blobs(5, 4);
        let mut y = vec!["a".to_string(); x.len()];
        y[7] = "b".into();
        let r = loocv(&x, &y, 1.0, 1.0).unwrap();
        assert_eq!(r.predictions[7], None);
        assert_eq!(r.correct, x.len() - 1);
    }

    #[test]
    fn two_opposite_samples_score_zero() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec!["a".to_string(), "b".to_string()];
        let r = loocv(&x, &y, 1.0, 1.0).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert!(loocv(&x[..1], &y[..1], 1.0, 1.0).is_err());
    }

    #[test]
    fn single_point_grid() {
        let (x, y) = blobs(6, 5);
        let s = grid_sweep(&x, &y, &[0.5], &[2.0]).unwrap();
        assert_eq!((s.best.sigma, s.best.c), (0.5, 2.0));
        assert_eq!(s.best, loocv(&x, &y, 0.5, 2.0).unwrap());
    }

    #[test]
    fn sweep_dominates_and_ignores_grid_order() {
        let (x, y) = blobs(10, 6);
        let sigmas = vec![0.05, 0.25, 1.0, 4.0, 16.0];
        let cs = vec![0.03125, 1.0, 32.0, 1024.0];
        let s = grid_sweep(&x, &y, &sigmas, &cs).unwrap();
        for &sg in &sigmas {
            for &c in &cs {
                assert!(s.best.accuracy >= loocv(&x, &y, sg, c).unwrap().accuracy);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut s2, mut c2) = (sigmas.clone(), cs.clone());
        s2.shuffle(&mut rng);
        c2.shuffle(&mut rng);
        let t = grid_sweep(&x, &y, &s2, &c2).unwrap();
        assert_eq!((t.best.sigma, t.best.c, t.best.correct), (s.best.sigma, s.best.c, s.best.correct));
        assert!(grid_sweep(&x, &y, &[], &cs).is_err());
    }

    #[test]
    fn default_grids() {
        let s = default_sigma_grid();
        assert_eq!((s.len(), s[0], s[16]), (17, 1.0 / 256.0, 256.0));
        let c = default_c_grid();
        assert_eq!((c.len(), c[0], c[20]), (21, 1.0 / 32.0, 32768.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn permutation_invariant(
            seed in 0u64..1000,
            sigma in 0.3f64..3.0,
            c in 0.1f64..100.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                .collect();
            let y: Vec<String> = (0..n).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let xp: Vec<_> = perm.iter().map(|&i| x[i].clone()).collect();
            let yp: Vec<_> = perm.iter().map(|&i| y[i].clone()).collect();
            let a = loocv(&x, &y, sigma, c).unwrap();
            let b = loocv(&xp, &yp, sigma, c).unwrap();
            prop_assert_eq!(a.correct, b.correct);
            prop_assert_eq!(&a.per_class, &b.per_class);
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(&b.predictions[k], &a.predictions[i]);
            }
        }
    }
}
