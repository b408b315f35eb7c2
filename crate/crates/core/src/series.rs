//! Uniformly sampled multi-column time series.

use crate::error::{HerdError, Result};

/// Samples on a uniform time grid; `columns[j][i]` is column `j` at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(names: &[&str]) -> Self {
        TimeSeries {
            times: Vec::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    pub fn with_capacity(names: &[&str], capacity: usize) -> Self {
        TimeSeries {
            times: Vec::with_capacity(capacity),
            names: names.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::with_capacity(capacity); names.len()],
        }
    }

    /// Builds a single-column series on the grid `t0 + i * dt`.
    pub fn from_values(name: &str, t0: f64, dt: f64, values: Vec<f64>) -> Self {
        TimeSeries {
            times: (0..values.len()).map(|i| t0 + i as f64 * dt).collect(),
            names: vec![name.to_string()],
            columns: vec![values],
        }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Grid spacing, taken from the first two samples.
    pub fn dt(&self) -> Option<f64> {
        match self.times.as_slice() {
            [t0, t1, ..] => Some(t1 - t0),
            _ => None,
        }
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
            .ok_or_else(|| HerdError::config("column", format!("no column named `{name}`")))
    }

    /// Drops the leading `fraction` of samples.
    pub fn discard_burn_in(&self, fraction: f64) -> TimeSeries {
        let skip = ((self.len() as f64) * fraction.clamp(0.0, 1.0)).floor() as usize;
        TimeSeries {
            times: self.times[skip..].to_vec(),
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[skip..].to_vec()).collect(),
        }
    }
}
