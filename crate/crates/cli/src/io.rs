//! Field files, CSV export, checksums and atomic writes.
//!
//! A field file is plain text:
//!
//! ```text
//! symtorus-field 1
//! dim 2
//! n 4
//! half_period 1
//! values
//! 0e0 1e0 2e0 3e0
//! ...
//! ```
//!
//! Values follow in row-major order (last axis fastest), one grid row of `n`
//! values per line. Numbers are written in the shortest form that reads back
//! to the same `f64`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use symtorus_core::{Grid, ScalarField};

use crate::error::CliError;

pub const MAGIC: &str = "symtorus-field 1";

pub fn field_to_text(u: &ScalarField) -> String {
    let g = u.grid();
    let mut out = String::with_capacity(24 * g.len() + 64);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dim {}", g.dim());
    let _ = writeln!(out, "n {}", g.n());
    let _ = writeln!(out, "half_period {:e}", g.half_period());
    out.push_str("values\n");
    for row in u.values().chunks(g.n()) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
    out
}

/// Parses a field file; `path` only labels error messages.
pub fn field_from_text(text: &str, path: &Path) -> Result<ScalarField, CliError> {
    let err = |line: usize, message: String| CliError::Format { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((no, other)) => return Err(err(no, format!("expected header {MAGIC:?}, found {other:?}"))),
        None => return Err(err(1, "empty file".into())),
    }
    let (mut dim, mut n, mut half) = (None, None, None);
    let mut last = 1;
    loop {
        let Some((no, line)) = lines.next() else {
            return Err(err(last, "missing \"values\" line".into()));
        };
        last = no;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "values" {
            break;
        }
        let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| err(no, format!("expected \"key value\", found {line:?}")))?;
        let value = value.trim();
        match key {
            "dim" => dim = Some(value.parse::<usize>().map_err(|e| err(no, format!("dim: {e}")))?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| err(no, format!("n: {e}")))?),
            "half_period" => half = Some(value.parse::<f64>().map_err(|e| err(no, format!("half_period: {e}")))?),
            _ => return Err(err(no, format!("unknown header key {key:?}"))),
        }
    }
    let missing = |k: &str| err(last, format!("header is missing {k:?}"));
    let (dim, n, half) = (dim.ok_or_else(|| missing("dim"))?, n.ok_or_else(|| missing("n"))?, half.ok_or_else(|| missing("half_period"))?);
    let grid = Grid::new(dim, n, half).map_err(|e| err(last, e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for (no, line) in lines {
        for token in line.split_whitespace() {
            if values.len() == grid.len() {
                return Err(err(no, format!("more than {} values", grid.len())));
            }
            let v: f64 = token.parse().map_err(|e| err(no, format!("value {token:?}: {e}")))?;
            if !v.is_finite() {
                return Err(err(no, format!("non-finite value {token:?}")));
            }
            values.push(v);
        }
        last = no;
    }
    if values.len() != grid.len() {
        return Err(err(last, format!("expected {} values, found {}", grid.len(), values.len())));
    }
    Ok(ScalarField::new(grid, values)?)
}

pub fn read_field(path: &Path) -> Result<ScalarField, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    field_from_text(&text, path)
}

pub fn write_field(path: &Path, u: &ScalarField) -> Result<(), CliError> {
    write_atomic(path, field_to_text(u).as_bytes())
}

/// One row per cell: coordinates `x0, x1, ...` and the value.
pub fn field_to_csv(u: &ScalarField) -> Result<String, CliError> {
    let g = u.grid();
    let mut header: Vec<String> = (0..g.dim()).map(|a| format!("x{a}")).collect();
    header.push("value".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for (flat, v) in u.values().iter().enumerate() {
        let idx = g.unravel(flat);
        let mut rec: Vec<String> = (0..g.dim()).map(|a| format!("{:e}", g.coordinate(idx[a]))).collect();
        rec.push(format!("{v:e}"));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish_csv(w)
}

pub(crate) fn csv_err(e: csv::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<csv>"), source: std::io::Error::other(e) }
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// SHA-256 of the ascending values' bit patterns. Equal for any two fields
/// holding the same multiset of values.
pub fn sorted_values_hash(u: &ScalarField) -> String {
    let mut v = u.values().to_vec();
    v.sort_by(f64::total_cmp);
    let mut hasher = Sha256::new();
    for x in v {
        hasher.update(x.to_bits().to_le_bytes());
    }
    hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
