//! CSV tables with an embedded JSON provenance header.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const COMMENT: &str = "# ";

#[derive(Clone, Debug)]
pub enum Cell {
    Text(String),
    Int(i128),
    Real(f64),
    /// Field outside the formula's domain or not computed.
    Missing,
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) if x.is_finite() => x.to_string(),
            Cell::Real(x) if x.is_nan() => String::new(),
            Cell::Real(x) => if *x > 0.0 { "inf" } else { "-inf" }.to_string(),
            Cell::Missing => String::new(),
            Cell::Flag(b) => u8::from(*b).to_string(),
        }
    }

    fn scaled(&self, s: f64) -> Cell {
        match self {
            Cell::Real(x) => Cell::Real(x * s),
            other => other.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i128)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Flag(x)
    }
}

/// Output table. Columns listed in `scalable` carry energies or frequencies in
/// reduced units and receive a `<name>_scaled` copy under `--physical-scale`.
pub struct Table {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub scalable: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Resolved system configuration, when the command has one.
    pub config: Option<Value>,
    pub parameters: Value,
}

impl Table {
    pub fn new(command: &'static str, columns: &[&'static str], scalable: &[&'static str]) -> Self {
        Table {
            command,
            columns: columns.to_vec(),
            scalable: scalable.to_vec(),
            rows: Vec::new(),
            config: None,
            parameters: Value::Null,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn header(&self, physical_scale: Option<f64>) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "generator": format!("nphoton {}", env!("CARGO_PKG_VERSION")),
            "command": self.command,
            "config": self.config,
            "parameters": self.parameters,
            "physical_scale": physical_scale,
        })
    }

    pub fn render(&self, physical_scale: Option<f64>) -> Result<Vec<u8>, CliError> {
        let scaled: Vec<usize> = match physical_scale {
            Some(_) => self.columns.iter().enumerate().filter(|(_, c)| self.scalable.contains(c)).map(|(i, _)| i).collect(),
            None => Vec::new(),
        };
        let mut out = Vec::new();
        writeln!(out, "{COMMENT}{}", self.header(physical_scale)).map_err(CliError::io)?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut names: Vec<String> = self.columns.iter().map(|c| c.to_string()).collect();
            names.extend(scaled.iter().map(|&i| format!("{}_scaled", self.columns[i])));
            w.write_record(&names).map_err(CliError::csv)?;
            for row in &self.rows {
                let mut cells: Vec<String> = row.iter().map(Cell::render).collect();
                if let Some(s) = physical_scale {
                    cells.extend(scaled.iter().map(|&i| row[i].scaled(s).render()));
                }
                w.write_record(&cells).map_err(CliError::csv)?;
            }
            w.flush().map_err(CliError::io)?;
        }
        Ok(out)
    }

    pub fn write(&self, out: Option<&Path>, physical_scale: Option<f64>) -> Result<(), CliError> {
        let bytes = self.render(physical_scale)?;
        match out {
            Some(path) => std::fs::write(path, bytes).map_err(CliError::io),
            None => std::io::stdout().write_all(&bytes).map_err(CliError::io),
        }
    }
}
