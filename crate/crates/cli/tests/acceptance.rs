//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each, and
//! exits nonzero if any fails. The end-to-end criteria drive the `topobar`
//! binary on a seeded synthetic dataset.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use topobar::bifiltration::{slice_subcomplex, slice_thresholds};
use topobar::imageio::{extract_roi, read_manifest};
use topobar::learn::{
    cmds_embed, default_c_grid, default_sigma_grid, grid_sweep, loocv, svm_train, DistanceMatrix,
};
use topobar::matching::{barcode_distance, brute_force_distance};
use topobar::mesh::{build_complex, filter_complex};
use topobar::persistence::{betti_at, compute_barcodes};
use topobar::{Barcode, Direction, GrayImage, Interval, LesionMask, RoiImage};
use topobar_cli::commands::load_roi;

const TOL: f64 = 1e-9;
const EMBED_TOL: f64 = 1e-6;

struct Gate {
    passed: usize,
    failed: Vec<String>,
}

impl Gate {
    fn record(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        println!("{} [{id}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(format!("[{id}] {name}"));
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> LesionMask {
    let on: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.55)).collect();
    // keep the largest 8-connected component; fall back to one pixel
    let mut seen = vec![false; w * h];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..w * h {
        if !on[s] || seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let (r, c) = (comp[k] / w, comp[k] % w);
            k += 1;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let j = nr as usize * w + nc as usize;
                    if on[j] && !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    if best.is_empty() {
        best.push(rng.random_range(0..w * h));
    }
    let mut inside = vec![false; w * h];
    for i in best {
        inside[i] = true;
    }
    LesionMask::new(w, h, inside).unwrap()
}

fn random_roi(rng: &mut ChaCha8Rng) -> RoiImage {
    let (w, h) = (rng.random_range(1..=8), rng.random_range(1..=8));
    // few levels so ties are common
    let levels = rng.random_range(2..=6);
    let values: Vec<f64> = (0..w * h).map(|_| rng.random_range(0..levels) as f64).collect();
    let img = GrayImage::new(w, h, values).unwrap();
    let mask = random_mask(rng, w, h);
    extract_roi(&img, &mask, rng.random_range(0..=5)).unwrap()
}

fn criterion_1(g: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checks, mut mismatches) = (0usize, 0usize);
    for _ in 0..100 {
        let roi = random_roi(&mut rng);
        let complex = build_complex(&roi);
        for values in [roi.intensity(), roi.border_dist()] {
            for dir in Direction::BOTH {
                let k = filter_complex(&complex, values, dir).unwrap();
                let (b0, b1) = compute_barcodes(&k).unwrap();
                let ts: BTreeSet<u64> = k.entries().iter().map(|e| e.to_bits()).collect();
                for t in ts.into_iter().map(f64::from_bits) {
                    checks += 1;
                    if (b0.alive_at(t), b1.alive_at(t)) != betti_at(&k, t) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    g.record(
        "1",
        "persistence matches Betti oracle",
        mismatches == 0 && elapsed < Duration::from_secs(120),
        format!("{checks} thresholds on 100 images, {mismatches} mismatches, {}", secs(elapsed)),
    );
}

fn criterion_2(g: &mut Gate) {
    let pixels: Vec<(usize, usize)> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).collect();
    let intensity: Vec<f64> = pixels.iter().map(|&p| if p == (1, 1) { 1.0 } else { 0.0 }).collect();
    let border: Vec<f64> = pixels.iter().map(|&p| if p == (1, 1) { 1.0 } else { 0.0 }).collect();
    let roi = RoiImage::from_parts(3, 3, pixels, intensity, border).unwrap();
    let k = filter_complex(&build_complex(&roi), roi.intensity(), Direction::Increasing).unwrap();
    let (_, b1) = compute_barcodes(&k).unwrap();
    let want = Barcode::new(1, vec![Interval::new(0.0, 1.0).unwrap()]);
    let oracle = (betti_at(&k, 0.0).1, betti_at(&k, 1.0).1);
    g.record(
        "2",
        "ring ROI gives dim-1 barcode {[0, 1]}",
        b1 == want && oracle == (1, 0),
        format!("got {:?}, oracle beta1 at 0 and 1 = {oracle:?}", b1.intervals()),
    );
}

fn random_barcode(rng: &mut ChaCha8Rng, max: usize) -> Barcode {
    let n = rng.random_range(0..=max);
    Barcode::new(
        0,
        (0..n)
            .map(|_| {
                // coarse grid values make shared endpoints common
                let a = rng.random_range(0..=22) as f64 * 0.05;
                let b = rng.random_range(0..=22) as f64 * 0.05;
                Interval::new(a.min(b), a.max(b)).unwrap()
            })
            .collect(),
    )
}

fn criterion_3(g: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let a = random_barcode(&mut rng, 5);
        let b = random_barcode(&mut rng, 5);
        let diff = (barcode_distance(&a, &b) - brute_force_distance(&a, &b).unwrap()).abs();
        worst = worst.max(diff);
    }
    let elapsed = start.elapsed();
    g.record(
        "3",
        "matching distance equals brute force",
        worst <= TOL && elapsed < Duration::from_secs(60),
        format!("500 pairs, max deviation {worst:.2e}, {}", secs(elapsed)),
    );
}

fn criterion_4(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for i in 0..200 {
        let a = random_barcode(&mut rng, 6);
        let b = random_barcode(&mut rng, 6);
        let c = random_barcode(&mut rng, 6);
        let (ab, ba) = (barcode_distance(&a, &b), barcode_distance(&b, &a));
        let (bc, ac) = (barcode_distance(&b, &c), barcode_distance(&a, &c));
        // same multiset in another order
        let mut rev = a.intervals().to_vec();
        rev.reverse();
        let a2 = Barcode::new(0, rev);
        let same = a.intervals() == b.intervals();
        if (ab - ba).abs() > TOL {
            failures.push(format!("triple {i}: asymmetric"));
        }
        if ab < 0.0 || bc < 0.0 || ac < 0.0 {
            failures.push(format!("triple {i}: negative"));
        }
        if barcode_distance(&a, &a2).abs() > TOL || (!same && ab <= TOL) || (same && ab > TOL) {
            failures.push(format!("triple {i}: identity"));
        }
        if ac > ab + bc + TOL {
            failures.push(format!("triple {i}: triangle"));
        }
    }
    g.record(
        "4",
        "metric axioms",
        failures.is_empty(),
        if failures.is_empty() {
            "200 triples".to_string()
        } else {
            failures.join("; ")
        },
    );
}

fn criterion_6(g: &mut Gate) {
    let tri = DistanceMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![0.0, 3.0, 4.0, 3.0, 0.0, 5.0, 4.0, 5.0, 0.0],
    )
    .unwrap();
    let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let mut sq = Vec::new();
    for a in corners {
        for b in corners {
            sq.push((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1));
        }
    }
    let square = DistanceMatrix::new(
        (0..4).map(|i| i.to_string()).collect(),
        sq.into_iter().map(f64::sqrt).collect(),
    )
    .unwrap();
    let mut worst = 0.0f64;
    for d in [&tri, &square] {
        let e = cmds_embed(d, 2).unwrap();
        for i in 0..d.len() {
            for j in 0..d.len() {
                let got: f64 = e.coords[i]
                    .iter()
                    .zip(&e.coords[j])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max((got - d.get(i, j)).abs());
            }
        }
    }
    g.record(
        "6",
        "classical MDS reproduces 3-4-5 triangle and unit square",
        worst <= EMBED_TOL,
        format!("max distance error {worst:.2e}"),
    );
}

fn criterion_7(g: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (label, cx) in [("left", -2.5), ("right", 2.5)] {
        for _ in 0..20 {
            x.push(vec![cx + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            y.push(label.to_string());
        }
    }
    let r = loocv(&x, &y, 1.0, 1.0).unwrap();
    let pair = svm_train(
        &[vec![-1.0], vec![1.0]],
        &["A".to_string(), "B".to_string()],
        1.0,
        1e6,
    )
    .unwrap();
    let svm = &pair.pairs[0].svm;
    let at_zero = svm.decision(&[0.0]);
    let sides = svm.decision(&[-1e-3]) > 0.0 && svm.decision(&[1e-3]) < 0.0;
    g.record(
        "7",
        "SVM sanity",
        r.accuracy >= 0.95 && at_zero.abs() < 1e-9 && sides,
        format!(
            "blob LOOCV accuracy {:.3}, two-point decision at 0 = {at_zero:.1e}",
            r.accuracy
        ),
    );
}

fn topobar(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_topobar"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "topobar {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Everything one end-to-end run writes.
struct Run {
    root: PathBuf,
    extract_time: Duration,
    classify_time: Duration,
}

fn run_pipeline(root: &Path) -> Result<Run, String> {
    let data = root.join("data");
    topobar(&["synth", "--out", p(&data), "--n-per-class", "20", "--seed", "0", "--noise", "0.1"])?;
    let manifest = data.join("manifest.csv");
    let start = Instant::now();
    for mode in ["1d", "2d"] {
        let panels = root.join(format!("panels_{mode}"));
        topobar(&["extract", "--manifest", p(&manifest), "--out", p(&panels), "--mode", mode])?;
    }
    let extract_time = start.elapsed();
    let start = Instant::now();
    for mode in ["1d", "2d"] {
        let panels = root.join(format!("panels_{mode}"));
        let dm = root.join(format!("distances_{mode}.csv"));
        topobar(&["distmat", "--panels", p(&panels), "--out", p(&dm)])?;
        topobar(&[
            "classify", "--manifest", p(&manifest), "--distmat", p(&dm), "--mode", mode,
            "--standardize", "--out", p(&root.join(format!("report_{mode}"))),
        ])?;
    }
    Ok(Run {
        root: root.to_path_buf(),
        extract_time,
        classify_time: start.elapsed(),
    })
}

fn panel_sizes(dir: &Path) -> Vec<usize> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|f| {
            serde_json::from_str::<serde_json::Map<String, Value>>(&fs::read_to_string(f).unwrap())
                .unwrap()
                .len()
        })
        .collect()
}

fn criterion_5(g: &mut Gate, run: &Run) {
    let sizes_2d = panel_sizes(&run.root.join("panels_2d"));
    let sizes_1d = panel_sizes(&run.root.join("panels_1d"));
    let counts_ok = sizes_2d.len() == 60
        && sizes_2d.iter().all(|&n| n == 160)
        && sizes_1d.len() == 60
        && sizes_1d.iter().all(|&n| n == 4);

    let ds = read_manifest(run.root.join("data/manifest.csv")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nested = 0usize;
    let mut broken = 0usize;
    for _ in 0..10 {
        let e = &ds.entries[rng.random_range(0..ds.len())];
        let roi = load_roi(e, topobar::DEFAULT_BORDER_WIDTH).unwrap();
        let complex = build_complex(&roi);
        let ts = slice_thresholds(topobar::DEFAULT_SLICES).unwrap();
        for dir in Direction::BOTH {
            let k = filter_complex(&complex, roi.intensity(), dir).unwrap();
            for border in Direction::BOTH {
                for w in ts.windows(2) {
                    let lo = slice_subcomplex(&roi, &k, w[0], border);
                    let hi = slice_subcomplex(&roi, &k, w[1], border);
                    nested += 1;
                    if !lo.is_subcomplex_of(&hi) {
                        broken += 1;
                    }
                }
            }
        }
    }
    g.record(
        "5",
        "panel contract",
        counts_ok && broken == 0,
        format!(
            "2d sizes {{{}}}, 1d sizes {{{}}}, {nested} slice pairs nested, {broken} violations",
            distinct(&sizes_2d),
            distinct(&sizes_1d)
        ),
    );
}

fn distinct(v: &[usize]) -> String {
    let s: BTreeSet<usize> = v.iter().copied().collect();
    s.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

fn report(run: &Run, mode: &str) -> Value {
    let text = fs::read_to_string(run.root.join(format!("report_{mode}/report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn criterion_8(g: &mut Gate, run: &Run) {
    let r1 = report(run, "1d");
    let r2 = report(run, "2d");
    let a1 = r1["accuracy"].as_f64().unwrap();
    let a2 = r2["accuracy"].as_f64().unwrap();
    let total = run.extract_time + run.classify_time;
    g.record(
        "8",
        "2d beats 1d on the synthetic benchmark",
        a2 > a1 && a2 >= 0.8 && total < Duration::from_secs(15 * 60),
        format!(
            "1d {:.2}% (sigma {}, C {}), 2d {:.2}% (sigma {}, C {}), extract {}, distances+classify {}",
            100.0 * a1,
            r1["sigma"],
            r1["c"],
            100.0 * a2,
            r2["sigma"],
            r2["c"],
            secs(run.extract_time),
            secs(run.classify_time)
        ),
    );

    // Informational: the same sweep on unstandardized features.
    let ds = read_manifest(run.root.join("data/manifest.csv")).unwrap();
    for mode in ["1d", "2d"] {
        let d = DistanceMatrix::load(run.root.join(format!("distances_{mode}.csv"))).unwrap();
        let raw = grid_sweep(
            &d.as_features().to_vecs(),
            &ds.labels(),
            &default_sigma_grid(),
            &default_c_grid(),
        )
        .unwrap();
        println!(
            "     note: {mode} without --standardize: {:.2}% (sigma {}, C {})",
            100.0 * raw.best.accuracy,
            raw.best.sigma,
            raw.best.c
        );
    }
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(g: &mut Gate, a: &Run, b: &Run) {
    let fa = files_under(&a.root);
    let fb = files_under(&b.root);
    let differing: Vec<String> = fa
        .iter()
        .filter(|f| fs::read(a.root.join(f)).ok() != fs::read(b.root.join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    g.record(
        "9",
        "repeated runs are byte-identical",
        fa == fb && differing.is_empty(),
        format!(
            "{} files compared, {} differ{}",
            fa.len(),
            differing.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(": {}", differing.join(", "))
            }
        ),
    );
}

fn main() {
    let mut g = Gate {
        passed: 0,
        failed: Vec::new(),
    };
    criterion_1(&mut g);
    criterion_2(&mut g);
    criterion_3(&mut g);
    criterion_4(&mut g);
    criterion_6(&mut g);
    criterion_7(&mut g);

    let tmp = tempfile::tempdir().unwrap();
    match (
        run_pipeline(&tmp.path().join("first")),
        run_pipeline(&tmp.path().join("second")),
    ) {
        (Ok(a), Ok(b)) => {
            criterion_5(&mut g, &a);
            criterion_8(&mut g, &a);
            criterion_9(&mut g, &a, &b);
        }
        (Err(e), _) | (_, Err(e)) => {
            for (id, name) in [
                ("5", "panel contract"),
                ("8", "2d beats 1d on the synthetic benchmark"),
                ("9", "repeated runs are byte-identical"),
            ] {
                g.record(id, name, false, e.clone());
            }
        }
    }

    println!(
        "acceptance: {} of {} criteria passed",
        g.passed,
        g.passed + g.failed.len()
    );
    if !g.failed.is_empty() {
        println!("failed: {}", g.failed.join(", "));
        std::process::exit(1);
    }
}
