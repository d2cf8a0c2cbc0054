//! Row-oriented output tables.

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Value};

use crate::config::Format;
use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Text(String),
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.filter(|x| x.is_finite()))
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Some(v).into()
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, Value>,
}

/// Seventeen significant digits: every double survives the round trip.
fn number(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| match c {
                Cell::Num(Some(x)) => number(*x),
                Cell::Num(None) => String::new(),
                Cell::Text(s) => s.clone(),
            }))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Num(v) => json!(v),
                            Cell::Text(s) => json!(s),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows, "metadata": self.metadata })
    }

    /// Writes in `format`; metadata goes to standard error for CSV.
    pub fn emit(&self, format: Format, out: &mut dyn Write) -> Result<(), Failure> {
        match format {
            Format::Csv => {
                for (k, v) in &self.metadata {
                    eprintln!("{k}: {v}");
                }
                self.write_csv(out).map_err(|e| Failure::Io(e.to_string()))
            }
            Format::Json => write_json(&self.to_json(), out),
        }
    }
}

pub fn write_json(v: &Value, out: &mut dyn Write) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(out).map_err(|e| Failure::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_empty_fields_and_full_precision() {
        let mut t = Table::new(&["x", "y", "phase"]);
        t.push(vec![0.1.into(), None.into(), "normal".into()]);
        t.push(vec![f64::NAN.into(), 2.0.into(), "critical".into()]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,phase");
        assert_eq!(lines[1], "1.0000000000000001e-1,,normal");
        assert_eq!(lines[2], ",2.0000000000000000e0,critical");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_uses_null() {
        let mut t = Table::new(&["x"]);
        t.push(vec![None.into()]);
        assert_eq!(t.to_json()["rows"][0][0], Value::Null);
    }
}
