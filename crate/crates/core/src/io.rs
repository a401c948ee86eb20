//! CSV and JSON file handling.
//!
//! Matrices are dense CSV without a header. Sample files may carry one header row, which is
//! detected by the presence of a non-numeric field in the first record. Floats are written with
//! the shortest representation that parses back to the same value; infinite entries are written
//! as `inf` / `-inf`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremes::SampleBlock;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_field(s: &str) -> Option<f64> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => t.parse::<f64>().ok(),
    }
}

fn read_records(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => parse_err(path, format!("{other:?}")),
        })?;
    rdr.records()
        .map(|r| r.map_err(|e| parse_err(path, e.to_string())))
        .filter(|r| r.as_ref().map_or(true, |rec| !(rec.len() == 1 && rec[0].is_empty())))
        .collect()
}

fn records_to_matrix(path: &Path, records: &[csv::StringRecord], first_line: usize) -> Result<DMatrix<f64>> {
    let ncols = records.first().map_or(0, |r| r.len());
    if records.is_empty() || ncols == 0 {
        return Err(parse_err(path, "no data rows"));
    }
    let mut m = DMatrix::<f64>::zeros(records.len(), ncols);
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != ncols {
            return Err(parse_err(
                path,
                format!("row {} has {} fields, expected {ncols}", i + first_line, rec.len()),
            ));
        }
        for (j, field) in rec.iter().enumerate() {
            m[(i, j)] = parse_field(field).ok_or_else(|| {
                parse_err(path, format!("row {}, column {}: '{field}' is not a number", i + first_line, j + 1))
            })?;
        }
    }
    Ok(m)
}

/// Reads a dense numeric CSV matrix (entries may be `inf`).
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    records_to_matrix(path, &read_records(path)?, 1)
}

/// Reads a sample file; returns the header when the first row is not numeric.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<(SampleBlock, Option<Vec<String>>)> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let has_header = records
        .first()
        .is_some_and(|r| r.iter().any(|f| parse_field(f).is_none()));
    let (header, body) = if has_header {
        let h = records[0].iter().map(str::to_string).collect();
        (Some(h), &records[1..])
    } else {
        (None, &records[..])
    };
    let m = records_to_matrix(path, body, if has_header { 2 } else { 1 })?;
    let block = SampleBlock::new(m).map_err(|e| parse_err(path, e.to_string()))?;
    Ok((block, header))
}

fn format_field(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// CSV text of a matrix, one row per line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|&v| format_field(v)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| parse_err(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| io_err(path, e))
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    atomic_write(path, matrix_to_csv(m).as_bytes())
}

pub fn write_samples_csv(path: impl AsRef<Path>, x: &SampleBlock, header: Option<&[String]>) -> Result<()> {
    let mut text = String::new();
    if let Some(h) = header {
        if h.len() != x.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: x.n_cols(),
                got: h.len(),
            });
        }
        text.push_str(&h.join(","));
        text.push('\n');
    }
    text.push_str(&matrix_to_csv(x.values()));
    atomic_write(path, text.as_bytes())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: impl AsRef<Path>, value: &(impl Serialize + ?Sized)) -> Result<()> {
    atomic_write(path, to_json_string(value)?.as_bytes())
}

pub fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    atomic_write(path, bytes)
}

pub fn ensure_dir(path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}
