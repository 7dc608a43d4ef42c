//! Comma-separated output with `#` metadata lines.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};

/// A CSV document: metadata lines, an optional header, then rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Floats use the shortest representation that parses back to the same bits,
/// switching to exponent form for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        // keep every metadata entry on one line
        let v = value.to_string().replace(['\n', '\r'], " ");
        self.meta.push((key.to_string(), v));
        self
    }

    pub fn row(&mut self, fields: Vec<String>) -> &mut Self {
        self.rows.push(fields);
        self
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut t = Self::default();
        for r in m.row_iter() {
            t.rows.push(r.iter().map(|&v| num(v)).collect());
        }
        t
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if !self.header.is_empty() {
            out.push_str(&self.header.join(","));
            out.push('\n');
        }
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }
}

/// Reads a numeric matrix, skipping `#` lines, blank lines and a leading
/// header line that does not parse as numbers.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() => continue,
            Err(e) => {
                return Err(CliError::Config(format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(CliError::Config(format!(
            "row {bad} has {} fields, expected {cols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text)
}
