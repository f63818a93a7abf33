//! CSV contract: UTF-8, comma separated, a header row of variable names,
//! one observation per row, decimal points, no missing cells.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::CliError;

pub fn read_view(path: &Path) -> Result<(DMatrix<f64>, Vec<String>), CliError> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {shown}: {e}")))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{shown}: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().any(|n| n.is_empty()) {
        return Err(CliError::Config(format!("{shown}: header row must name every column")));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let record = record.map_err(|e| CliError::Config(format!("{shown}: {e}")))?;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(CliError::Config(format!(
                    "{shown}: missing value at line {line}, column '{}'",
                    names[j]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Config(format!("{shown}: '{cell}' at line {line}, column '{}' is not a number", names[j]))
            })?;
            if !v.is_finite() {
                return Err(CliError::Config(format!(
                    "{shown}: non-finite value '{cell}' at line {line}, column '{}'",
                    names[j]
                )));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Config(format!("{shown}: no observations")));
    }
    Ok((DMatrix::from_row_slice(rows, names.len(), &values), names))
}

/// Matrix as CSV with the given header; 17 significant digits.
pub fn matrix_csv(header: &[String], m: &DMatrix<f64>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Weight table: one row per variable, columns `variable,w1,...,wr`.
pub fn weights_csv(names: &[String], w: &DMatrix<f64>, prefix: &str) -> String {
    let mut out = String::from("variable");
    for j in 0..w.ncols() {
        let _ = write!(out, ",{prefix}{}", j + 1);
    }
    out.push('\n');
    for (i, name) in names.iter().enumerate() {
        out.push_str(name);
        for j in 0..w.ncols() {
            let _ = write!(out, ",{:.16e}", w[(i, j)]);
        }
        out.push('\n');
    }
    out
}
