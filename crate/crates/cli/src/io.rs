//! CSV and JSON input and output.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Floats are written with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_cell(s: &str, path: &Path, row: usize, col: usize) -> CliResult<f64> {
    let t = s.trim();
    t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
        CliError::Input(format!("{}: row {row}, column {col}: '{t}' is not a finite number", path.display()))
    })
}

/// Reads a numeric table. A first row that does not parse as numbers is
/// taken as a header.
pub fn read_numeric_csv(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut width = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = i + 1;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if i == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(CliError::Input(format!(
                    "{}: row {line} has {} columns, expected {w}",
                    path.display(),
                    rec.len()
                )))
            }
            _ => {}
        }
        let row = rec.iter().enumerate().map(|(j, c)| parse_cell(c, path, line, j + 1)).collect::<CliResult<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

pub fn read_design(x_path: &Path, y_path: &Path) -> CliResult<(DMatrix<f64>, DVector<f64>)> {
    let xr = read_numeric_csv(x_path)?;
    let yr = read_numeric_csv(y_path)?;
    if yr[0].len() != 1 {
        return Err(CliError::Input(format!("{}: response must have one column, found {}", y_path.display(), yr[0].len())));
    }
    if xr.len() != yr.len() {
        return Err(CliError::Input(format!(
            "{} has {} rows but {} has {}",
            x_path.display(),
            xr.len(),
            y_path.display(),
            yr.len()
        )));
    }
    if xr.len() < 3 {
        return Err(CliError::Input(format!("need at least 3 observations, found {}", xr.len())));
    }
    let (n, p) = (xr.len(), xr[0].len());
    let x = DMatrix::from_fn(n, p, |i, j| xr[i][j]);
    let y = DVector::from_iterator(n, yr.iter().map(|r| r[0]));
    Ok((x, y))
}

/// Writes a CSV from a header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let wrap = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_matrix(path: &Path, prefix: &str, x: &DMatrix<f64>) -> CliResult<()> {
    let names: Vec<String> = (1..=x.ncols()).map(|j| format!("{prefix}{j}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_csv(path, &header, x.row_iter().map(|r| r.iter().map(|v| fmt_f64(*v)).collect()))
}
