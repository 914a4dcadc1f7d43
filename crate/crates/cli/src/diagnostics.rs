//! CSV output.

use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // 17 significant digits round-trip every f64.
            Self::Float(v) => write!(f, "{v:.16e}"),
            Self::Int(v) => write!(f, "{v}"),
            Self::Text(s) => f.write_str(s),
            Self::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Self::Int(v as i64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Float)
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
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no diagnostic records to write to {0}")]
    Empty(String),
    #[error("diagnostics I/O error: {0}")]
    Csv(#[from] csv::Error),
    #[error("diagnostics I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub fn render(table: &Table) -> Result<Vec<u8>, DiagnosticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.into_inner().map_err(|e| DiagnosticsError::Io(e.into_error()))
}

/// Header row plus one row per record.
pub fn emit_diagnostics(table: &Table, path: impl AsRef<Path>) -> Result<(), DiagnosticsError> {
    let path = path.as_ref();
    if table.rows.is_empty() {
        return Err(DiagnosticsError::Empty(path.display().to_string()));
    }
    std::fs::write(path, render(table)?)?;
    Ok(())
}
