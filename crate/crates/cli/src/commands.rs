use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use topobar::imageio::{extract_roi, load_image, read_manifest, DatasetEntry};
use topobar::learn::{
    cmds_embed, distance_matrix, grid_sweep, svm_train, ClassAccuracy, DistanceMatrix, Embedding,
};
use topobar::synth::{generate_dataset, DatasetSpec};
use topobar::{bifiltration, BarcodePanel, LabeledDataset, LesionMask, PanelKey, RoiImage};

use crate::svg;
use crate::{CliError, RunConfig};

type Result<T> = std::result::Result<T, CliError>;

/// File stem and matrix id of a manifest entry.
pub fn panel_id(entry: &DatasetEntry) -> String {
    format!("{:04}", entry.id)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Input(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn synth(out: &Path, spec: &DatasetSpec) -> Result<LabeledDataset> {
    let ds = generate_dataset(out, spec)?;
    info!("wrote {} images to {}", ds.len(), out.display());
    Ok(ds)
}

pub fn load_roi(entry: &DatasetEntry, border: usize) -> topobar::Result<RoiImage> {
    let img = load_image(&entry.image)?;
    let mask = LesionMask::load(&entry.mask)?;
    Ok(extract_roi(&img, &mask, border)?.with_provenance(panel_id(entry)))
}

/// Computes one panel per manifest entry. Every entry is attempted; the
/// error lists each failure.
pub fn compute_panels(ds: &LabeledDataset, cfg: &RunConfig) -> Result<Vec<BarcodePanel>> {
    let results: Vec<topobar::Result<BarcodePanel>> = ds
        .entries
        .par_iter()
        .map(|e| {
            let roi = load_roi(e, cfg.border)?;
            let mut panel = bifiltration::compute(&roi, cfg.mode, cfg.slices, cfg.cap)?;
            panel.id = panel_id(e);
            Ok(panel)
        })
        .collect();
    let mut panels = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (e, r) in ds.entries.iter().zip(results) {
        match r {
            Ok(p) => panels.push(p),
            Err(err) => {
                warn!("{}: {err}", e.image.display());
                failures.push(format!("  {} ({}): {err}", panel_id(e), e.image.display()));
            }
        }
    }
    if !failures.is_empty() {
        return Err(CliError::Input(format!(
            "{} of {} images failed:\n{}",
            failures.len(),
            ds.len(),
            failures.join("\n")
        )));
    }
    Ok(panels)
}

/// Writes `<id>.json` per image plus `index.csv` listing ids in manifest
/// order. Nothing is written unless every image succeeds.
pub fn extract(manifest: &Path, out: &Path, cfg: &RunConfig) -> Result<Vec<BarcodePanel>> {
    let ds = read_manifest(manifest)?;
    info!(
        "extracting {} panels ({} mode, {} slices, border {})",
        ds.len(),
        cfg.mode,
        cfg.slices,
        cfg.border
    );
    let panels = compute_panels(&ds, cfg)?;
    let mut index = String::from("id,file\n");
    for p in &panels {
        write_file(&out.join(format!("{}.json", p.id)), p.to_json() + "\n")?;
        writeln!(index, "{0},{0}.json", p.id).unwrap();
    }
    write_file(&out.join("index.csv"), index)?;
    info!("wrote {} panels to {}", panels.len(), out.display());
    Ok(panels)
}

/// Loads the panels listed in `index.csv`, or every `*.json` file in name
/// order when there is no index.
pub fn load_panels(dir: &Path) -> Result<Vec<BarcodePanel>> {
    let index = dir.join("index.csv");
    let files: Vec<(String, PathBuf)> = if index.is_file() {
        read_file(&index)?
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let (id, file) = l.split_once(',').ok_or_else(|| {
                    CliError::Input(format!("{}: malformed line {l:?}", index.display()))
                })?;
                Ok((id.trim().to_string(), dir.join(file.trim())))
            })
            .collect::<Result<_>>()?
    } else {
        let mut found: Vec<(String, PathBuf)> = fs::read_dir(dir)
            .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), p))
            .collect();
        found.sort();
        found
    };
    if files.is_empty() {
        return Err(CliError::Input(format!("no panels in {}", dir.display())));
    }
    files
        .into_iter()
        .map(|(id, path)| {
            BarcodePanel::from_json(id, &read_file(&path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

pub fn check_layout(panels: &[BarcodePanel]) -> Result<()> {
    if let Some(first) = panels.first() {
        if let Some(bad) = panels.iter().find(|p| !p.same_layout(first)) {
            return Err(CliError::Input(format!(
                "panel {} is {} with {} slices but panel {} is {} with {} slices; mixed layouts cannot be compared",
                bad.id,
                bad.mode(),
                bad.slices(),
                first.id,
                first.mode(),
                first.slices()
            )));
        }
    }
    Ok(())
}

pub fn distmat(panels_dir: &Path, out: &Path) -> Result<DistanceMatrix> {
    let panels = load_panels(panels_dir)?;
    check_layout(&panels)?;
    info!("computing {} pairwise panel distances", panels.len() * (panels.len().saturating_sub(1)) / 2);
    let d = distance_matrix(&panels)?;
    write_file(out, d.to_csv())?;
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub id: String,
    pub label: String,
    pub predicted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub mode: String,
    pub standardize: bool,
    pub samples: usize,
    pub comparison_set: usize,
    pub sigma: f64,
    pub c: f64,
    pub correct: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
    pub sigma_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub predictions: Vec<Prediction>,
}

impl ClassifyReport {
    pub fn table(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|r| r.label.len())
            .chain([7])
            .max()
            .unwrap_or(7);
        let mut s = format!(
            "{:<width$}  {:>5}  {:>7}  {:>8}\n",
            "class", "n", "correct", "accuracy"
        );
        let row = |s: &mut String, label: &str, n: usize, k: usize| {
            writeln!(
                s,
                "{label:<width$}  {n:>5}  {k:>7}  {:>7.2}%",
                100.0 * k as f64 / n as f64
            )
            .unwrap();
        };
        for r in &self.per_class {
            row(&mut s, &r.label, r.total, r.correct);
        }
        row(&mut s, "overall", self.samples, self.correct);
        writeln!(
            s,
            "mode {}, sigma {}, C {}{}",
            self.mode,
            self.sigma,
            self.c,
            if self.standardize { ", standardized" } else { "" }
        )
        .unwrap();
        s
    }
}

pub enum Source<'a> {
    Distmat(&'a Path),
    Panels(&'a Path),
}

/// Grid-swept leave-one-out classification of the manifest's images against
/// the whole comparison set. Writes `report.json`, `per_class.txt`, and
/// `model.json` (trained on every listed image at the chosen parameters).
fn on_edge(grid: &[f64], v: f64) -> bool {
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    grid.len() > 1 && (v == lo || v == hi)
}

pub fn classify(
    manifest: &Path,
    source: Source<'_>,
    out: &Path,
    cfg: &RunConfig,
) -> Result<ClassifyReport> {
    let ds = read_manifest(manifest)?;
    let mut distinct = ds.labels();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(CliError::Input(format!(
            "{} lists a single class; classification needs at least two",
            manifest.display()
        )));
    }
    let (d, mode) = match source {
        Source::Distmat(p) => (DistanceMatrix::load(p)?, cfg.mode),
        Source::Panels(dir) => {
            let panels = load_panels(dir)?;
            check_layout(&panels)?;
            let mode = panels[0].mode();
            if mode != cfg.mode {
                info!("panels are {mode}; using that as the mode tag");
            }
            (distance_matrix(&panels)?, mode)
        }
    };
    let mut rows = Vec::with_capacity(ds.len());
    for e in &ds.entries {
        let id = panel_id(e);
        let row = d.ids.iter().position(|x| *x == id).ok_or_else(|| {
            CliError::Input(format!("manifest image {id} is missing from the distance matrix"))
        })?;
        rows.push(row);
    }
    let mut features = d.as_features().select_rows(&rows);
    if cfg.standardize {
        features = features.standardized();
    }
    let x = features.to_vecs();
    let labels = ds.labels();
    info!(
        "sweeping {} x {} grid over {} samples ({} comparison images)",
        cfg.sigmas.len(),
        cfg.cs.len(),
        x.len(),
        d.len()
    );
    let sweep = grid_sweep(&x, &labels, &cfg.sigmas, &cfg.cs)?;
    let best = sweep.best;
    if on_edge(&cfg.sigmas, best.sigma) || on_edge(&cfg.cs, best.c) {
        warn!(
            "best point (sigma {}, C {}) lies on the edge of the grid; consider widening it",
            best.sigma, best.c
        );
    }
    let model = svm_train(&x, &labels, best.sigma, best.c)?;

    let report = ClassifyReport {
        mode: mode.to_string(),
        standardize: cfg.standardize,
        samples: x.len(),
        comparison_set: d.len(),
        sigma: best.sigma,
        c: best.c,
        correct: best.correct,
        accuracy: best.accuracy,
        per_class: best.per_class,
        sigma_grid: cfg.sigmas.clone(),
        c_grid: cfg.cs.clone(),
        predictions: ds
            .entries
            .iter()
            .zip(best.predictions)
            .map(|(e, p)| Prediction {
                id: panel_id(e),
                label: e.label.clone(),
                predicted: p,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&out.join("report.json"), json + "\n")?;
    write_file(&out.join("per_class.txt"), report.table())?;
    write_file(&out.join("model.json"), model.to_json() + "\n")?;
    Ok(report)
}

/// Writes `embedding.csv` and `embedding.svg`. Labels for coloring come from
/// the manifest when one is given.
pub fn embed(distmat: &Path, manifest: Option<&Path>, k: usize, out: &Path) -> Result<Embedding> {
    let d = DistanceMatrix::load(distmat)?;
    let e = cmds_embed(&d, k)?;
    if e.truncated() {
        warn!(
            "only {} positive eigenvalue(s); wrote {} of {k} axes",
            e.axes(),
            e.axes()
        );
    }
    let labels: Vec<Option<String>> = match manifest {
        Some(m) => {
            let ds = read_manifest(m)?;
            d.ids
                .iter()
                .map(|id| {
                    ds.entries
                        .iter()
                        .find(|e| panel_id(e) == *id)
                        .map(|e| e.label.clone())
                })
                .collect()
        }
        None => vec![None; d.len()],
    };
    write_file(&out.join("embedding.csv"), e.to_csv())?;
    let points: Vec<svg::Point> = e
        .ids
        .iter()
        .zip(&e.coords)
        .zip(labels)
        .map(|((id, c), label)| svg::Point {
            id: id.clone(),
            x: c.first().copied().unwrap_or(0.0),
            y: c.get(1).copied().unwrap_or(0.0),
            label,
        })
        .collect();
    let mut title = format!("classical MDS, {} of {k} axes", e.axes());
    if e.axes() == 3 {
        title.push_str(" (axis 3 dropped in this view)");
    }
    write_file(&out.join("embedding.svg"), svg::scatter(&points, &title))?;
    Ok(e)
}

pub fn plot(panel: &Path, key: &str, out: &Path, cap: f64) -> Result<()> {
    let stem = panel
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let p = BarcodePanel::from_json(stem.clone(), &read_file(panel)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", panel.display())))?;
    let k: PanelKey = key.parse()?;
    let b = p
        .get(&k)
        .ok_or_else(|| CliError::Input(format!("key {key} is not in panel {stem}")))?;
    let title = format!("{stem} {key} (dim {}, {} bars)", b.dim, b.len());
    write_file(out, svg::barcode(b, &title, cap))
}
