use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetEntry {
    pub id: usize,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub label: String,
}

/// Labeled image/mask pairs. Entry ids are `0..len` in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledDataset {
    pub entries: Vec<DatasetEntry>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.label.clone()).collect()
    }
}

/// Parses a manifest without checking that the referenced files exist.
/// Paths are resolved relative to the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, 0, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Manifest {
                path: path.to_path_buf(),
                row: 0,
                msg: format!("missing column {name:?}"),
            })
    };
    let (ci, cm, cl) = (column("image")?, column("mask")?, column("label")?);

    let mut entries = Vec::new();
    for (id, record) in rdr.records().enumerate() {
        let row = id + 1;
        let record = record.map_err(|e| csv_error(path, row, e))?;
        let field = |c: usize| {
            record
                .get(c)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::Manifest {
                    path: path.to_path_buf(),
                    row,
                    msg: format!("empty {:?} field", &headers[c]),
                })
        };
        entries.push(DatasetEntry {
            id,
            image: base.join(field(ci)?),
            mask: base.join(field(cm)?),
            label: field(cl)?.to_string(),
        });
    }
    Ok(LabeledDataset { entries })
}

/// Parses a manifest and requires every referenced file to exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let ds = read_manifest(path)?;
    for e in &ds.entries {
        for (what, p) in [("image", &e.image), ("mask", &e.mask)] {
            if !p.is_file() {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    row: e.id + 1,
                    msg: format!("{what} file {} does not exist", p.display()),
                });
            }
        }
    }
    Ok(ds)
}

/// Writes `image,mask,label` rows. Paths are written as given, so callers
/// should pass paths relative to the manifest directory.
pub fn write_manifest(path: impl AsRef<Path>, rows: &[(String, String, String)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, 0, e))?;
    w.write_record(["image", "mask", "label"])
        .map_err(|e| csv_error(path, 0, e))?;
    for (i, (img, mask, label)) in rows.iter().enumerate() {
        w.write_record([img, mask, label])
            .map_err(|e| csv_error(path, i + 1, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, row: usize, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return Error::io(path, io);
        }
        unreachable!()
    }
    Error::Manifest {
        path: path.to_path_buf(),
        row,
        msg: e.to_string(),
    }
}
