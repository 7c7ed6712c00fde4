//! PGM (P2/P5) and numeric CSV grids.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

/// Loads a PGM (P2 or P5, maxval up to 65535) or a comma-separated numeric
/// grid. The format is detected from the leading magic number.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_image(&bytes, path)
}

/// Parses image bytes; `path` is only used in error messages.
pub fn parse_image(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    match bytes.get(..2) {
        Some(b"P2") => parse_pgm(bytes, path, false),
        Some(b"P5") => parse_pgm(bytes, path, true),
        _ => parse_csv(bytes, path),
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&b) = self.bytes.get(self.pos) {
                    if b == b'\n' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                if b == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Next whitespace-delimited token and the line it starts on.
    fn token(&mut self) -> Option<(&'a str, usize)> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .map(|s| (s, self.line))
    }
}

fn parse_pgm(bytes: &[u8], path: &Path, binary: bool) -> Result<GrayImage> {
    let mut rd = HeaderReader {
        bytes,
        pos: 2,
        line: 1,
    };
    let mut header = [0usize; 3];
    let names = ["width", "height", "maxval"];
    for (slot, name) in header.iter_mut().zip(names) {
        let (tok, line) = rd
            .token()
            .ok_or_else(|| Error::format(path, rd.line, format!("missing {name}")))?;
        *slot = tok
            .parse()
            .map_err(|_| Error::format(path, line, format!("bad {name} {tok:?}")))?;
    }
    let [width, height, maxval] = header;
    if width == 0 || height == 0 {
        return Err(Error::format(path, rd.line, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(
            path,
            rd.line,
            format!("maxval {maxval} outside 1..=65535"),
        ));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates maxval from the raster
        if !rd.bytes.get(rd.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(Error::format(path, rd.line, "missing raster separator"));
        }
        let raster = &bytes[rd.pos + 1..];
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        if raster.len() < need {
            return Err(Error::format(
                path,
                rd.line,
                format!("raster has {} bytes, expected {need}", raster.len()),
            ));
        }
        for i in 0..n {
            let v = if wide {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as usize
            } else {
                raster[i] as usize
            };
            if v > maxval {
                return Err(Error::format(
                    path,
                    rd.line,
                    format!("pixel {i} value {v} exceeds maxval {maxval}"),
                ));
            }
            values.push(v as f64);
        }
    } else {
        for i in 0..n {
            let (tok, line) = rd.token().ok_or_else(|| {
                Error::format(path, rd.line, format!("expected {n} pixels, found {i}"))
            })?;
            if tok.starts_with('-') {
                return Err(Error::format(path, line, format!("negative value {tok}")));
            }
            let v: usize = tok
                .parse()
                .map_err(|_| Error::format(path, line, format!("bad pixel value {tok:?}")))?;
            if v > maxval {
                return Err(Error::format(
                    path,
                    line,
                    format!("value {v} exceeds maxval {maxval}"),
                ));
            }
            values.push(v as f64);
        }
    }
    GrayImage::new(width, height, values).map_err(|e| Error::format(path, 1, e.to_string()))
}

fn parse_csv(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::format(path, 1, "not UTF-8"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            let cell = cell.trim();
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::format(path, line_no, format!("bad number {cell:?}")))?;
            if !v.is_finite() {
                return Err(Error::format(path, line_no, format!("non-finite value {cell}")));
            }
            if v < 0.0 {
                return Err(Error::format(path, line_no, format!("negative value {cell}")));
            }
            row.push(v);
        }
        if rows.is_empty() {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::format(
                path,
                line_no,
                format!("ragged row: {} values, expected {width}", row.len()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, 1, "empty grid"));
    }
    let height = rows.len();
    GrayImage::new(width, height, rows.concat()).map_err(|e| Error::format(path, 1, e.to_string()))
}

/// Writes a binary PGM. Values are rounded and must fit in `maxval`.
pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    for &v in img.values() {
        let q = v.round();
        if q > maxval as f64 {
            return Err(Error::InvalidArgument(format!(
                "value {v} exceeds maxval {maxval}"
            )));
        }
        if maxval > 255 {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_csv(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for row in img.values().chunks(img.width()) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", cells.join(",")).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
