//! CSV tables and JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    /// Floats use 17 significant digits so they parse back exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// Parses a CSV produced by [`Table::to_csv`] whose cells are all numeric.
pub fn parse_numeric_csv(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Config(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes `<command>.csv` and `<command>.summary.json` into `dir`.
/// Both files are rendered before either is written.
pub fn emit_results(table: &Table, summary: &Value, dir: &Path, command: &str) -> Result<(PathBuf, PathBuf), CliError> {
    let csv = table.to_csv()?;
    let mut json = serde_json::to_string_pretty(summary)?;
    json.push('\n');
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{command}.csv"));
    let json_path = dir.join(format!("{command}.summary.json"));
    fs::write(&csv_path, csv)?;
    fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["omega_t", "f_bb"]);
        assert_eq!(t.to_csv().unwrap(), b"omega_t,f_bb\n");
    }

    #[test]
    fn float_rendering() {
        assert_eq!(Cell::Float(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Float(-2.5).render(), "-2.5000000000000000e0");
        assert_eq!(Cell::Int(7).render(), "7");
    }

    #[test]
    #[should_panic]
    fn ragged_rows_rejected() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![1.0.into()]);
    }
}
