//! Matrix files.
//!
//! DSM1 layout: the magic bytes `DSM1`, then the row and column counts as
//! little-endian `u64`, then `rows * cols` little-endian `f64` values in
//! row-major order. Header-free comma-separated text is accepted as a
//! fallback and chosen for output when the path ends in `.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: [u8; 4] = *b"DSM1";
const HEADER_LEN: usize = 20;

pub fn encode_dsm1<T: Real>(m: &DMatrix<T>) -> Vec<u8> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for i in 0..rows {
        for j in 0..cols {
            out.extend_from_slice(&m[(i, j)].as_f64().to_le_bytes());
        }
    }
    out
}

pub fn decode_dsm1<T: Real>(bytes: &[u8]) -> Result<DMatrix<T>> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::Format("missing DSM1 magic".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated DSM1 header".into()));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let payload = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::Format(format!("dimensions {rows}x{cols} overflow")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != payload {
        return Err(Error::Format(format!(
            "payload is {} bytes, {rows}x{cols} needs {payload}",
            body.len()
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let values: Vec<T> = body
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn encode_csv<T: Real>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{}", v.as_f64())).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv<T: Real>(text: &str) -> Result<DMatrix<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(format!("CSV: {e}")))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Format(format!(
                    "CSV row {} has {} fields, expected {c}",
                    rows + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("CSV field {field:?} is not a number")))?;
            values.push(T::lit(v));
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

fn is_csv_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a DSM1 file, or CSV when the magic is absent.
pub fn read_matrix<T: Real>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(&MAGIC) {
        return decode_dsm1(&bytes);
    }
    if is_csv_path(path.as_ref()) || bytes.is_ascii() {
        let text = std::str::from_utf8(&bytes).map_err(|_| Error::Format("not UTF-8".into()))?;
        return decode_csv(text);
    }
    Err(Error::Format("missing DSM1 magic".into()))
}

/// Writes CSV when the path ends in `.csv`, DSM1 otherwise.
pub fn write_matrix<T: Real>(path: impl AsRef<Path>, m: &DMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv_path(path) { encode_csv(m).into_bytes() } else { encode_dsm1(m) };
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}
