//! Per-run CSV files.
//!
//! Numbers are written with `{:e}`, the shortest decimal that parses back to
//! the same `f64`.

use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::runner::Table;

pub const COLUMNS: [&str; 6] = ["t", "gap_u", "gap_v", "grad_norm_v", "energy", "dist_argmin"];

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let header: Vec<&str> =
        COLUMNS.iter().copied().filter(|c| *c != "energy" || table.energy.is_some()).collect();
    w.write_record(&header)?;
    let cols: Vec<&[f64]> = header.iter().map(|c| table.column(c).expect("known column")).collect();
    for i in 0..table.t.len() {
        w.write_record(cols.iter().map(|c| format!("{:e}", c[i])))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns read back from a CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvColumns {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvColumns {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|i| self.columns[i].as_slice())
    }
}

/// Error locating a malformed CSV cell.
#[derive(Debug)]
pub struct CsvError {
    pub line: u64,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for CsvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for CsvError {}

pub fn read_columns(path: &Path) -> Result<CsvColumns> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("t") {
        bail!(CsvError { line: 1, column: 1, message: "first column must be 't'".into() });
    }
    let mut columns = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CsvError { line, column: 0, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, cell) in rec.iter().enumerate() {
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.trim().parse().map_err(|_| CsvError {
                    line,
                    column: j + 1,
                    message: format!("'{cell}' is not a number"),
                })?
            };
            columns[j].push(v);
        }
    }
    Ok(CsvColumns { header, columns })
}
