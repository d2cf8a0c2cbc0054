//! One-dimensional parameter sweeps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive `start:end:step` grid; `end` is kept when it lies within half a
/// step of the last node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("bad grid {start}:{end}:{step}")));
        }
        Ok(Self { start, end, step })
    }

    /// Nodes `start + k step`; empty when `end < start`.
    pub fn points(&self) -> Vec<f64> {
        if self.end < self.start {
            return Vec::new();
        }
        let n = ((self.end - self.start) / self.step + 0.5).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::InvalidInput(format!("grid '{s}' is not start:end:step")));
        };
        let num = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number '{t}' in grid '{s}'")))
        };
        Self::new(num(a)?, num(b)?, num(c)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub grid: Vec<f64>,
    pub columns: Vec<Column>,
    pub metadata: BTreeMap<String, String>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }
}

/// Evaluates `f` at every grid node in parallel. `f` returns one value per
/// column name, `None` where the quantity is undefined at that node.
pub fn sweep<F>(axis: &str, grid: &[f64], names: &[&str], f: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Vec<Option<f64>> + Sync,
{
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("sweep grid must be strictly increasing".into()));
    }
    let rows: Vec<Vec<Option<f64>>> = grid.par_iter().map(|&x| f(x)).collect();
    let mut columns: Vec<Column> =
        names.iter().map(|n| Column { name: n.to_string(), values: Vec::with_capacity(grid.len()) }).collect();
    for row in rows {
        if row.len() != names.len() {
            return Err(Error::InvalidInput(format!("row has {} values for {} columns", row.len(), names.len())));
        }
        for (c, v) in columns.iter_mut().zip(row) {
            c.values.push(v.filter(|x| x.is_finite()));
        }
    }
    Ok(SweepResult { axis: axis.to_string(), grid: grid.to_vec(), columns, metadata: BTreeMap::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: GridSpec = "0.05:0.85:0.005".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 161);
        assert!((p[160] - 0.85).abs() < 1e-12);
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("1:2:0".parse::<GridSpec>().is_err());
        assert!("2:1:0.1".parse::<GridSpec>().unwrap().points().is_empty());
    }

    #[test]
    fn sweep_basic() {
        let s =
            sweep("x", &[0.0, 1.0, 2.0], &["sq", "inv"], |x| vec![Some(x * x), (x != 0.0).then(|| 1.0 / x)]).unwrap();
        assert_eq!(s.column("sq").unwrap(), &[Some(0.0), Some(1.0), Some(4.0)]);
        assert_eq!(s.column("inv").unwrap()[0], None);
        let empty = sweep("x", &[], &["a"], |_| vec![None]).unwrap();
        assert!(empty.grid.is_empty() && empty.columns[0].values.is_empty());
        assert!(sweep("x", &[1.0, 1.0], &["a"], |_| vec![None]).is_err());
    }
}
