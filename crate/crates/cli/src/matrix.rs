//! Plain CSV matrices: row-major, no header, one matrix row per line.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::CliError;

/// Reads a matrix file. Errors name the file and the 1-based line.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|(line, msg)| CliError::Input(format!("{}:{line}: {msg}", path.display())))
}

/// Parses matrix text; the error carries the offending line.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>, (u64, String)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            (line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let width = *cols.get_or_insert(rec.len());
        if rec.len() != width {
            return Err((line, format!("expected {width} fields, found {}", rec.len())));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| (line, format!("field {}: `{field}` is not a number", k + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or((1, "no data rows".to_string()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Row-major CSV with 17 significant digits, enough to round-trip any `f64`.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    std::fs::write(path, format_matrix(m)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
